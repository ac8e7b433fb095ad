#pragma once
// Pulse-sequence bookkeeping for the photon-emission measurement cycles: phase
// tables (lasers, ion position, detuning, detection gates), the derived
// repetition rate with timing checks, and a piecewise cycle evaluation that
// reads out every detection gate.
//
// Two cycle shapes are provided: the standing-wave mapping cycle (cool at a
// node, shuttle, probe at the scan position, return) and the coupling
// measurement cycle (which brackets the probe with a reference transmission
// sample and returns under additional Doppler cooling).
//
// Conventions:
//  - cavity_detuning is the effective detuning of the cavity from the P -> D
//    resonance as seen with the phase's active Raman beam. Between phases the
//    hardware realises a change by retuning the beam, not the cavity, so the
//    cooling phase records the nominal detuning plus its blue offset.
//  - Cooling dynamics are not propagated; cooling quality enters the cycle
//    evaluation through the per-phase position distributions.

#include <cstddef>
#include <string>
#include <vector>

#include "localize.hpp"
#include "model.hpp"
#include "units.hpp"

namespace icq::sequence {

// beams that can be switched per phase
enum class Laser {
  pump397,               // S1/2 <-> P1/2 pump (cooling or probe Rabi frequency)
  doppler393,            // S1/2 <-> P3/2 Doppler cooling
  repump850,             // D3/2 <-> P3/2 repumper
  repump854,             // D5/2 <-> P3/2 repumper
  probe866_transmission, // cavity transmission sample on the 866 nm resonance
};

const char* laser_name(Laser laser);

enum class IonPosition { node, antinode, in_transit };

const char* position_name(IonPosition position);

struct Phase {
  std::string label;
  double duration = 0.0;        // s
  std::vector<Laser> lasers_on; // no duplicates, order irrelevant
  IonPosition ion_position = IonPosition::node;
  double cavity_detuning = 0.0; // rad/s, see header note
  bool detection_gate = false;

  bool has_laser(Laser laser) const;
  // positive finite duration, finite detuning, unique lasers, and no
  // detection gate while the ion is in transit
  void validate() const;
};

enum class SequenceKind { standing_wave, coupling_measurement };

struct PulseSequence {
  SequenceKind kind = SequenceKind::standing_wave;
  std::vector<Phase> phases; // executed in order, one gate per gated phase

  double total_duration() const;  // s
  double repetition_rate() const; // Hz, 1 / total_duration
  std::size_t gate_count() const;

  // per-phase invariants plus the gate structure: a standing-wave cycle
  // carries at most one detection gate; a coupling-measurement cycle carries
  // exactly two, a reference gate on the transmission beam before the signal
  // gate on the photon window
  void validate() const;
};

// Durations and detunings shared by both builders. Cooling time, settle
// delay, probe window, cooling offset and the cycle rate are published
// numbers; the remaining splits are fixed here so that the default total
// reproduces that rate.
struct SequenceConfig {
  double prep_duration = 2.0e-6;    // state preparation + reference sample
  double cool_duration = 6.0e-6;    // cavity cooling
  double shuttle_duration = 1.0e-6; // node -> antinode transport
  double settle_duration = 1.7e-6;  // transient-voltage delay before the probe
  double probe_duration = 0.3e-6;   // gated photon window
  double return_duration = 2.0e-6;  // antinode -> node transport
  double cavity_detuning = -units::mhz_to_rad(10.0); // nominal, probe phases
  double cooling_offset = units::mhz_to_rad(7.0);    // cooling-phase blue shift
  double repetition_rate = 0.0; // Hz; > 0 checks the durations against it
  double rate_tolerance = 0.01; // fractional mismatch the check allows

  void validate() const;
};

// Four phases: cooling at the node (detuning blue-shifted by the cooling
// offset), shuttle plus settle in transit, the gated probe window at the
// antinode, and the repumped return. Defaults total 11.0 us.
PulseSequence standing_wave_sequence(const SequenceConfig& config = {});

// Five phases: preparation with the gated reference-transmission sample at
// the node, cooling, shuttle plus settle, the gated photon window at the
// antinode, and the return with additional 393 nm Doppler cooling.
PulseSequence coupling_measurement_sequence(const SequenceConfig& config = {});

struct GateReading {
  std::size_t phase_index = 0;
  std::string label;          // label of the gated phase
  bool transmission = false;  // true: bare-cavity transmission sample
  double value = 0.0;         // transmission in [0, 1] or photon probability
};

// Piecewise-constant cycle evaluation. Preparation, cooling and transport
// phases pump the ion into the even S1/2 mixture with the cavity in vacuum;
// each gated phase is then read out under its own conditions:
//  - transmission gates return the bare-cavity Lorentzian at the detuning
//    between the 866 nm sample beam (on atomic resonance) and the cavity,
//    the prepared S1/2 ion being transparent there;
//  - photon gates integrate the master equation over the phase duration with
//    the phase's detuning and position substituted into params (remaining
//    fields, including the pump beam, are taken from params unchanged).
// dist_by_phase is either empty (every gate evaluates at its phase's nominal
// position: node = 0, antinode = quarter wavelength) or one distribution per
// phase; a gated phase then evaluates at dist.mean smeared over the
// distribution's width.
std::vector<GateReading> simulate_cycle(
    const PulseSequence& seq, const model::SystemParams& params,
    const std::vector<localize::PositionDistribution>& dist_by_phase = {},
    double tol = 1e-8);

// Phase table as JSON: {"phases": [{label, duration_us, lasers, position,
// cavity_detuning_mhz, gate}, ...], "total_duration_us",
// "repetition_rate_khz"}, phases in execution order.
std::string to_json(const PulseSequence& seq);

} // namespace icq::sequence
