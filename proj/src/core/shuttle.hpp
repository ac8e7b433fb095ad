#pragma once

// Adiabatic shuttle waveforms: Blackman-Nuttall voltage pulses for the rf
// ground electrodes, the linear voltage-to-displacement calibration, and a
// spectral-leakage measure of motional excitation at a trap frequency.

#include <vector>

namespace icq::shuttle {

// Four-term Blackman-Nuttall window, peak value 1 at t = T/2 and 3.628e-4 at
// the edges.  Throws a validation error for t outside [0, T].
double bnw(double t, double T);

struct ShuttlePulse {
  double amplitude = 2.0;    // V, plateau voltage
  double rise_time = 1e-6;   // s, transport to the cavity
  double hold_time = 2e-6;   // s, settle plus probe at the plateau
  double fall_time = 2e-6;   // s, return transport
  double sample_rate = 1e9;  // Hz

  // durations nonnegative, and every nonzero segment covered by >= 20 samples
  void validate() const;
};

struct Calibration {
  double alpha = 108.25e-9; // m/V; 2.0 V moves the ion one quarter wavelength

  void validate() const;
};

struct WaveformSample {
  double time = 0.0;    // s
  double voltage = 0.0; // V
};

// Voltage trace of one electrode: a rising half-window from ~0 to amplitude
// over rise_time, a constant hold, and a falling half-window back to ~0.  The
// edge samples are bnw's edge value, 3.628e-4 x amplitude.
std::vector<WaveformSample> generate_waveform(const ShuttlePulse& pulse);

// Exact negation for the opposite electrode of the pair.
std::vector<WaveformSample> opposite_electrode(const std::vector<WaveformSample>& wf);

// |Fourier amplitude of the velocity profile at omega| / peak displacement.
// A rectangular step gives exactly 1, a constant exactly 0; transport is
// adiabatic at omega when this falls below a threshold (10^-3 is apt).  The
// waveform must span at least two periods of omega.
double spectral_leakage(const std::vector<WaveformSample>& waveform, double omega);

// alpha x volts, sign-preserving
double displacement(double volts, const Calibration& cal);

} // namespace icq::shuttle
