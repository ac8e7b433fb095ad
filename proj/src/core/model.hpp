#pragma once

// Level scheme and master-equation assembly for a single 40Ca+ ion coupled to
// a two-mode fiber cavity near the 866 nm P1/2 <-> D3/2 transition, pumped on
// S1/2 <-> P1/2 at 397 nm.
//
// Rotating frame: S sublevels sit at 0, P at -Delta_pump, D at
// Delta_cavity - Delta_pump, so the two-photon Raman resonance is
// Delta_cavity = Delta_pump before light shifts move it.
//
// Linewidth convention: kappa is simultaneously the FWHM of the empty-cavity
// transmission Lorentzian and the photon-number decay rate used for the
// cavity collapse operators (T(d) = 1 / (1 + (2 d / kappa)^2)).

#include <array>
#include <complex>
#include <vector>

#include "interp.hpp"
#include "qdyn.hpp"

namespace icq::model {

using qdyn::Complex;

// ion basis indices
enum Level : int {
  S_down = 0, // S1/2, m = -1/2
  S_up = 1,   // S1/2, m = +1/2
  P_down = 2, // P1/2, m = -1/2
  P_up = 3,   // P1/2, m = +1/2
  D_m32 = 4,  // D3/2, m = -3/2
  D_m12 = 5,
  D_p12 = 6,
  D_p32 = 7,
};
inline constexpr int n_ion_levels = 8;

struct IonLevels {
  double gamma = 0.0;        // total P1/2 decay rate, rad/s
  double branching_s = 0.0;  // P -> S fraction (blue branch)
  double branching_d = 0.0;  // P -> D fraction (infrared branch)
  std::array<double, n_ion_levels> zeeman_shifts{}; // rad/s, diagonal offsets

  static IonLevels calcium_default();
  void validate() const;
};

// spherical components ordered (q = -1, 0, +1)
using Polarization = std::array<Complex, 3>;

struct LaserField {
  double rabi = 0.0;     // rad/s
  double detuning = 0.0; // rad/s from the S -> P resonance
  Polarization polarization{};

  static LaserField pi_polarized(double rabi, double detuning);
  void validate() const;
};

struct CavityParams {
  double g0 = 0.0;         // rad/s, peak coupling on the strongest transition
  double kappa = 0.0;      // rad/s, FWHM = photon decay rate (see header note)
  double detuning = 0.0;   // rad/s from the P -> D resonance
  double wavelength = 0.0; // m
  int n_max = 1;           // Fock cutoff per polarization mode
  std::array<Polarization, 2> mode_polarizations{};

  static CavityParams defaults();
  void validate() const;
  double node_spacing() const { return 0.5 * wavelength; }
  double wavenumber() const;
};

struct TrapParams {
  double omega_axial = 0.0; // secular angular frequency, rad/s
  double omega_rf = 0.0;    // drive angular frequency, rad/s
  double q_param = 0.0;     // Mathieu q
  double mass = 0.0;        // kg

  static TrapParams defaults();
  void validate() const;
};

enum class PhaseOrigin { node, antinode };

struct SystemParams {
  IonLevels ion;
  CavityParams cavity;
  TrapParams trap;
  std::vector<LaserField> lasers; // exactly one coherent pump per build
  double position = 0.0;          // m along the axis, measured from the origin below
  PhaseOrigin coupling_phase_origin = PhaseOrigin::node;
  double repump_rate = 0.0; // rad/s, incoherent D -> S recycling (0 = off)

  // probe-condition defaults: ion at an antinode, repumpers off
  static SystemParams defaults();
  void validate() const;
  double position_from_node() const;
};

// standing-wave coupling g0 sin(k x) for x measured from a node
double local_coupling(double x_from_node, const CavityParams& cavity);

// Full master equation on the 8 x (n_max+1) x (n_max+1) space: coherent pump
// and cavity couplings with Clebsch-Gordan weights, P decay split over both
// branches and all photon polarizations, two cavity loss channels, optional
// incoherent repump.
qdyn::MasterEquation build_system(const SystemParams& params);

qdyn::HilbertSpace system_space(const SystemParams& params);

// total photon number over both modes, embedded in the full space
qdyn::Operator photon_number(const SystemParams& params);

// kappa * <n_total>: photons leaving the cavity per second
double emission_rate(const qdyn::DensityMatrix& rho, const SystemParams& params);

// even S1/2 mixture with both modes in vacuum
qdyn::DensityMatrix initial_probe_state(const SystemParams& params);

// integral of the emission rate over the probe window, starting from rho0
double photon_probability(const SystemParams& params, const qdyn::DensityMatrix& rho0,
                          double duration, double tol = 1e-8);
// ... starting from initial_probe_state
double photon_probability(const SystemParams& params, double duration, double tol = 1e-8);

struct ScanPoint {
  double x = 0.0;
  double value = 0.0;
};

// Lorentzian transmission of the bare resonator, unit peak.
std::vector<ScanPoint> empty_cavity_scan(const std::vector<double>& detunings, double kappa);

// Probe photon probability tabulated against |g| so scans and localisation
// smearing reuse one set of solves; interpolation is shape-preserving.
class EmissionCurve {
public:
  EmissionCurve(const SystemParams& params, double duration, int n_samples = 33,
                double tol = 1e-8);

  double at_coupling(double g) const; // uses |g|, clamped to [0, g0]
  double at_position(double x_from_node) const;
  double g0() const { return g0_; }
  double wavenumber() const { return k_; }
  double duration() const { return duration_; }

private:
  double g0_ = 0.0;
  double k_ = 0.0;
  double duration_ = 0.0;
  interp::CubicHermite curve_;
};

} // namespace icq::model
