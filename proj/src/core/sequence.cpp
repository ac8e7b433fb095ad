#include "sequence.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace icq::sequence {

const char* laser_name(Laser laser) {
  switch (laser) {
    case Laser::pump397: return "pump397";
    case Laser::doppler393: return "doppler393";
    case Laser::repump850: return "repump850";
    case Laser::repump854: return "repump854";
    case Laser::probe866_transmission: return "probe866_transmission";
  }
  throw_validation("unknown laser");
}

const char* position_name(IonPosition position) {
  switch (position) {
    case IonPosition::node: return "node";
    case IonPosition::antinode: return "antinode";
    case IonPosition::in_transit: return "in-transit";
  }
  throw_validation("unknown ion position");
}

bool Phase::has_laser(Laser laser) const {
  for (Laser on : lasers_on)
    if (on == laser) return true;
  return false;
}

void Phase::validate() const {
  require(std::isfinite(duration) && duration > 0.0,
          "phase '" + label + "': duration must be positive");
  require(std::isfinite(cavity_detuning),
          "phase '" + label + "': non-finite cavity detuning");
  for (std::size_t i = 0; i < lasers_on.size(); ++i)
    for (std::size_t j = i + 1; j < lasers_on.size(); ++j)
      require(lasers_on[i] != lasers_on[j], "phase '" + label + "': duplicate laser " +
                                                laser_name(lasers_on[i]));
  require(!(detection_gate && ion_position == IonPosition::in_transit),
          "phase '" + label + "': detection gate while the ion is in transit");
}

double PulseSequence::total_duration() const {
  double total = 0.0;
  for (const Phase& phase : phases) total += phase.duration;
  return total;
}

double PulseSequence::repetition_rate() const {
  const double total = total_duration();
  require(total > 0.0, "sequence has no duration");
  return 1.0 / total;
}

std::size_t PulseSequence::gate_count() const {
  std::size_t count = 0;
  for (const Phase& phase : phases)
    if (phase.detection_gate) ++count;
  return count;
}

void PulseSequence::validate() const {
  require(!phases.empty(), "sequence has no phases");
  for (const Phase& phase : phases) phase.validate();
  std::vector<std::size_t> gates;
  for (std::size_t i = 0; i < phases.size(); ++i)
    if (phases[i].detection_gate) gates.push_back(i);
  if (kind == SequenceKind::standing_wave) {
    require(gates.size() <= 1, "standing-wave sequence: more than one detection gate");
  } else {
    require(gates.size() == 2,
            "coupling sequence: expected a reference gate and a signal gate");
    require(phases[gates[0]].has_laser(Laser::probe866_transmission),
            "coupling sequence: missing reference transmission gate");
    require(!phases[gates[1]].has_laser(Laser::probe866_transmission),
            "coupling sequence: missing signal gate after the reference");
  }
}

void SequenceConfig::validate() const {
  const struct { const char* name; double value; } durations[] = {
      {"prep", prep_duration},       {"cool", cool_duration},
      {"shuttle", shuttle_duration}, {"settle", settle_duration},
      {"probe", probe_duration},     {"return", return_duration},
  };
  for (const auto& d : durations)
    require(std::isfinite(d.value) && d.value > 0.0,
            std::string("sequence config: ") + d.name + " duration must be positive");
  require(std::isfinite(cavity_detuning), "sequence config: non-finite cavity detuning");
  require(std::isfinite(cooling_offset), "sequence config: non-finite cooling offset");
  require(std::isfinite(repetition_rate) && repetition_rate >= 0.0,
          "sequence config: repetition rate must be zero or positive");
  require(rate_tolerance > 0.0 && rate_tolerance < 1.0,
          "sequence config: rate tolerance outside (0, 1)");
}

namespace {

// compare the assembled total against a requested cycle rate
void check_rate(const PulseSequence& seq, const SequenceConfig& config) {
  if (config.repetition_rate <= 0.0) return;
  const double total = seq.total_duration();
  const double required = 1.0 / config.repetition_rate;
  if (std::abs(total - required) <= config.rate_tolerance * required) return;
  char buf[176];
  std::snprintf(buf, sizeof buf,
                "sequence timing: phases total %.4f us but %.4f kHz requires "
                "%.4f us (deficit %+.4f us)",
                total / units::us, config.repetition_rate / 1e3,
                required / units::us, (total - required) / units::us);
  throw_validation(buf);
}

double nominal_position(IonPosition position, const model::CavityParams& cavity) {
  switch (position) {
    case IonPosition::node: return 0.0;
    case IonPosition::antinode: return 0.25 * cavity.wavelength;
    case IonPosition::in_transit: break;
  }
  throw_validation("no nominal position for a phase in transit");
}

} // namespace

PulseSequence standing_wave_sequence(const SequenceConfig& config) {
  config.validate();
  PulseSequence seq;
  seq.kind = SequenceKind::standing_wave;
  seq.phases = {
      Phase{"I cooling",
            config.cool_duration,
            {Laser::pump397, Laser::repump850, Laser::repump854},
            IonPosition::node,
            config.cavity_detuning + config.cooling_offset,
            false},
      Phase{"II shuttle + settle",
            config.shuttle_duration + config.settle_duration,
            {},
            IonPosition::in_transit,
            config.cavity_detuning,
            false},
      Phase{"III probe",
            config.probe_duration,
            {Laser::pump397},
            IonPosition::antinode,
            config.cavity_detuning,
            true},
      Phase{"IV return",
            config.return_duration,
            {Laser::repump850, Laser::repump854},
            IonPosition::in_transit,
            config.cavity_detuning,
            false},
  };
  check_rate(seq, config);
  seq.validate();
  return seq;
}

PulseSequence coupling_measurement_sequence(const SequenceConfig& config) {
  config.validate();
  PulseSequence seq;
  seq.kind = SequenceKind::coupling_measurement;
  seq.phases = {
      Phase{"I preparation + reference",
            config.prep_duration,
            {Laser::repump850, Laser::repump854, Laser::probe866_transmission},
            IonPosition::node,
            config.cavity_detuning,
            true},
      Phase{"II cooling",
            config.cool_duration,
            {Laser::pump397, Laser::repump850, Laser::repump854},
            IonPosition::node,
            config.cavity_detuning + config.cooling_offset,
            false},
      Phase{"III shuttle + settle",
            config.shuttle_duration + config.settle_duration,
            {},
            IonPosition::in_transit,
            config.cavity_detuning,
            false},
      Phase{"IV photon",
            config.probe_duration,
            {Laser::pump397},
            IonPosition::antinode,
            config.cavity_detuning,
            true},
      Phase{"V return",
            config.return_duration,
            {Laser::repump850, Laser::repump854, Laser::doppler393},
            IonPosition::in_transit,
            config.cavity_detuning,
            false},
  };
  check_rate(seq, config);
  seq.validate();
  return seq;
}

std::vector<GateReading> simulate_cycle(
    const PulseSequence& seq, const model::SystemParams& params,
    const std::vector<localize::PositionDistribution>& dist_by_phase, double tol) {
  seq.validate();
  require(dist_by_phase.empty() || dist_by_phase.size() == seq.phases.size(),
          "simulate_cycle: dist_by_phase must be empty or give one "
          "distribution per phase");
  std::vector<GateReading> readings;
  for (std::size_t i = 0; i < seq.phases.size(); ++i) {
    const Phase& phase = seq.phases[i];
    if (!phase.detection_gate) continue;
    GateReading reading;
    reading.phase_index = i;
    reading.label = phase.label;
    if (phase.has_laser(Laser::probe866_transmission)) {
      // The sample beam sits on the atomic resonance, so it meets the cavity
      // at minus the phase detuning; the prepared S1/2 ion is transparent to
      // it and the bare lineshape survives.
      reading.transmission = true;
      reading.value = model::empty_cavity_scan({-phase.cavity_detuning},
                                               params.cavity.kappa)[0]
                          .value;
    } else {
      model::SystemParams local = params;
      local.cavity.detuning = phase.cavity_detuning;
      local.coupling_phase_origin = model::PhaseOrigin::node;
      const localize::PositionDistribution* dist =
          dist_by_phase.empty() ? nullptr : &dist_by_phase[i];
      const double mean =
          dist ? dist->mean : nominal_position(phase.ion_position, params.cavity);
      if (dist == nullptr || dist->total_sigma() == 0.0) {
        local.position = mean;
        reading.value = model::photon_probability(local, phase.duration, tol);
      } else {
        const model::EmissionCurve curve(local, phase.duration, 33, tol);
        reading.value = localize::smear(
            [&curve](double x) { return curve.at_position(x); }, *dist);
      }
    }
    readings.push_back(std::move(reading));
  }
  return readings;
}

std::string to_json(const PulseSequence& seq) {
  seq.validate();
  nlohmann::ordered_json phase_records = nlohmann::ordered_json::array();
  for (const Phase& phase : seq.phases) {
    nlohmann::ordered_json rec;
    rec["label"] = phase.label;
    rec["duration_us"] = phase.duration / units::us;
    nlohmann::ordered_json lasers = nlohmann::ordered_json::array();
    for (Laser laser : phase.lasers_on) lasers.push_back(laser_name(laser));
    rec["lasers"] = std::move(lasers);
    rec["position"] = position_name(phase.ion_position);
    rec["cavity_detuning_mhz"] = units::rad_to_mhz(phase.cavity_detuning);
    rec["gate"] = phase.detection_gate;
    phase_records.push_back(std::move(rec));
  }
  nlohmann::ordered_json root;
  root["phases"] = std::move(phase_records);
  root["total_duration_us"] = seq.total_duration() / units::us;
  root["repetition_rate_khz"] = seq.repetition_rate() / 1e3;
  return root.dump(2) + "\n";
}

} // namespace icq::sequence
