#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/localize.hpp"
#include "core/model.hpp"
#include "core/sequence.hpp"
#include "core/units.hpp"

using namespace icq;
using namespace icq::sequence;
using doctest::Approx;
using icq::units::two_pi;

TEST_CASE("standing-wave cycle timing matches the published rate") {
  const PulseSequence seq = standing_wave_sequence();

  CHECK(seq.phases.size() == 4);
  CHECK(seq.total_duration() == Approx(11.0e-6).epsilon(1e-12));

  // published cycle rate: 91 kHz, which the default split must hit within 1%
  const double rate = seq.repetition_rate();
  CHECK(rate == Approx(1.0 / 11.0e-6).epsilon(1e-12));
  CHECK(std::abs(rate - 91.0e3) <= 0.01 * 91.0e3);

  // rate is the exact reciprocal of the total
  CHECK(rate * seq.total_duration() == Approx(1.0).epsilon(1e-12));

  // the single gate sits inside the probe phase and nowhere else
  CHECK(seq.gate_count() == 1);
  const Phase& probe = seq.phases[2];
  CHECK(probe.detection_gate);
  CHECK(probe.duration == Approx(0.3e-6).epsilon(1e-12));
  CHECK(probe.ion_position == IonPosition::antinode);
  CHECK(probe.has_laser(Laser::pump397));

  // shuttle transport bundles the settle delay before the probe window
  CHECK(seq.phases[1].duration == Approx(2.7e-6).epsilon(1e-12));
  CHECK(seq.phases[1].ion_position == IonPosition::in_transit);
  CHECK(seq.phases[1].lasers_on.empty());

  // cooling runs at the node, blue-shifted 7 MHz from the probe detuning
  const Phase& cool = seq.phases[0];
  CHECK(cool.ion_position == IonPosition::node);
  CHECK(cool.has_laser(Laser::pump397));
  CHECK(cool.has_laser(Laser::repump850));
  CHECK(cool.has_laser(Laser::repump854));
  CHECK(cool.cavity_detuning - probe.cavity_detuning ==
        Approx(two_pi * 7.0e6).epsilon(1e-12));

  // the return transport repumps both D levels and is not Doppler-assisted
  const Phase& back = seq.phases[3];
  CHECK(back.has_laser(Laser::repump850));
  CHECK(back.has_laser(Laser::repump854));
  CHECK(!back.has_laser(Laser::doppler393));
  CHECK(!back.detection_gate);

  // identical configs produce identical phase tables
  CHECK(to_json(standing_wave_sequence()) == to_json(seq));
}

TEST_CASE("repetition rate is the reciprocal of the phase total") {
  const double base_rate = standing_wave_sequence().repetition_rate();

  SequenceConfig halved;
  halved.prep_duration /= 2.0;
  halved.cool_duration /= 2.0;
  halved.shuttle_duration /= 2.0;
  halved.settle_duration /= 2.0;
  halved.probe_duration /= 2.0;
  halved.return_duration /= 2.0;
  CHECK(standing_wave_sequence(halved).repetition_rate() ==
        Approx(2.0 * base_rate).epsilon(1e-12));

  for (double scale : {0.35, 1.0, 3.7}) {
    SequenceConfig config;
    config.cool_duration *= scale;
    config.probe_duration *= scale;
    for (const PulseSequence& seq :
         {standing_wave_sequence(config), coupling_measurement_sequence(config)}) {
      CHECK(seq.repetition_rate() * seq.total_duration() ==
            Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("requested repetition rate is checked against the durations") {
  SequenceConfig config;

  // 91 kHz implies 10.989 us; the 11.0 us default is 0.1% long, inside 1%
  config.repetition_rate = 91.0e3;
  CHECK_NOTHROW(standing_wave_sequence(config));

  // the exact reciprocal passes trivially
  config.repetition_rate = 1.0 / 11.0e-6;
  CHECK_NOTHROW(standing_wave_sequence(config));

  // 100 kHz implies 10 us; the mismatch is reported with its size
  config.repetition_rate = 100.0e3;
  CHECK_THROWS_WITH_AS(standing_wave_sequence(config),
                       doctest::Contains("deficit"), Error);
  try {
    standing_wave_sequence(config);
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::validation);
    CHECK(std::string(err.what()).find("10.0000 us") != std::string::npos);
    CHECK(std::string(err.what()).find("+1.0000 us") != std::string::npos);
  }

  // a widened tolerance accepts the same mismatch
  config.rate_tolerance = 0.15;
  CHECK_NOTHROW(standing_wave_sequence(config));
}

TEST_CASE("coupling-measurement cycle structure") {
  const PulseSequence seq = coupling_measurement_sequence();

  CHECK(seq.phases.size() == 5);

  // published cooling time: phase II runs for exactly 6 us by default
  CHECK(seq.phases[1].duration == Approx(6.0e-6).epsilon(1e-12));

  // reference transmission gate first, photon gate later
  CHECK(seq.gate_count() == 2);
  CHECK(seq.phases[0].detection_gate);
  CHECK(seq.phases[0].has_laser(Laser::probe866_transmission));
  CHECK(seq.phases[0].ion_position == IonPosition::node);
  CHECK(seq.phases[3].detection_gate);
  CHECK(!seq.phases[3].has_laser(Laser::probe866_transmission));
  CHECK(seq.phases[3].ion_position == IonPosition::antinode);

  // the return leg adds 393 nm Doppler cooling
  CHECK(seq.phases[4].has_laser(Laser::doppler393));

  SUBCASE("cooling offset is locked to the scanned detuning") {
    // scanning the cavity drags the cooling beam along, so the cooling
    // phase stays exactly 7 MHz blue of every scanned detuning
    for (double mhz : {-15.0, -10.0, -5.0, 0.0, 4.0}) {
      SequenceConfig config;
      config.cavity_detuning = units::mhz_to_rad(mhz);
      const PulseSequence scanned = coupling_measurement_sequence(config);
      CHECK(scanned.phases[1].cavity_detuning - config.cavity_detuning ==
            Approx(two_pi * 7.0e6).epsilon(1e-12));
      CHECK(scanned.phases[3].cavity_detuning ==
            Approx(config.cavity_detuning).epsilon(1e-12));
    }
  }

  SUBCASE("dropping the preparation phase loses the reference gate") {
    PulseSequence broken = seq;
    broken.phases.erase(broken.phases.begin());
    CHECK_THROWS_WITH_AS(broken.validate(), doctest::Contains("reference"), Error);
  }

  SUBCASE("a transmission-free first gate is not a reference") {
    PulseSequence broken = seq;
    broken.phases[0].lasers_on = {Laser::repump850, Laser::repump854};
    CHECK_THROWS_WITH_AS(broken.validate(),
                         doctest::Contains("reference transmission"), Error);
  }
}

TEST_CASE("phase and sequence invariants") {
  Phase phase;
  phase.label = "test";
  phase.duration = 1.0e-6;

  SUBCASE("durations must be positive") {
    phase.duration = 0.0;
    CHECK_THROWS_WITH_AS(phase.validate(), doctest::Contains("positive"), Error);
  }

  SUBCASE("no detection while the ion moves") {
    phase.ion_position = IonPosition::in_transit;
    phase.detection_gate = true;
    CHECK_THROWS_WITH_AS(phase.validate(), doctest::Contains("transit"), Error);
  }

  SUBCASE("laser lists are duplicate-free") {
    phase.lasers_on = {Laser::pump397, Laser::pump397};
    CHECK_THROWS_WITH_AS(phase.validate(), doctest::Contains("duplicate"), Error);
  }

  SUBCASE("a standing-wave cycle carries at most one gate") {
    PulseSequence seq = standing_wave_sequence();
    seq.phases[0].detection_gate = true;
    CHECK_THROWS_WITH_AS(seq.validate(),
                         doctest::Contains("more than one detection gate"), Error);
  }

  SUBCASE("empty sequences are rejected") {
    PulseSequence seq;
    CHECK_THROWS_WITH_AS(seq.validate(), doctest::Contains("no phases"), Error);
  }
}

TEST_CASE("phase tables serialize to ordered JSON records") {
  const std::string swj = to_json(standing_wave_sequence());

  // record keys appear in schema order within the first record
  const std::size_t p_label = swj.find("\"label\"");
  const std::size_t p_duration = swj.find("\"duration_us\"");
  const std::size_t p_lasers = swj.find("\"lasers\"");
  const std::size_t p_position = swj.find("\"position\"");
  const std::size_t p_detuning = swj.find("\"cavity_detuning_mhz\"");
  const std::size_t p_gate = swj.find("\"gate\"");
  REQUIRE(p_label != std::string::npos);
  CHECK(p_label < p_duration);
  CHECK(p_duration < p_lasers);
  CHECK(p_lasers < p_position);
  CHECK(p_position < p_detuning);
  CHECK(p_detuning < p_gate);

  CHECK(swj.find("\"duration_us\": 6.0") != std::string::npos);
  CHECK(swj.find("\"in-transit\"") != std::string::npos);
  CHECK(swj.find("\"antinode\"") != std::string::npos);
  CHECK(swj.find("\"pump397\"") != std::string::npos);
  CHECK(swj.find("\"repetition_rate_khz\"") != std::string::npos);

  const std::string cmj = to_json(coupling_measurement_sequence());
  CHECK(cmj.find("\"probe866_transmission\"") != std::string::npos);
  CHECK(cmj.find("\"doppler393\"") != std::string::npos);
}

TEST_CASE("cycle evaluation reads out every gate") {
  const model::SystemParams params = model::SystemParams::defaults();
  SequenceConfig config;
  config.cavity_detuning = params.cavity.detuning;
  const PulseSequence seq = standing_wave_sequence(config);

  // the probe phase reproduces the direct probe-window computation exactly
  const double direct = model::photon_probability(params, 0.3e-6);
  const std::vector<GateReading> readings = simulate_cycle(seq, params);
  REQUIRE(readings.size() == 1);
  CHECK(readings[0].phase_index == 2);
  CHECK(!readings[0].transmission);
  CHECK(readings[0].value == Approx(direct).epsilon(1e-12));
  CHECK(readings[0].value > 0.0);
  CHECK(readings[0].value < 1.0);

  SUBCASE("standing-wave contrast between antinode and node") {
    PulseSequence at_node = seq;
    at_node.phases[2].ion_position = IonPosition::node;
    const double node_value = simulate_cycle(at_node, params)[0].value;
    CHECK(node_value < readings[0].value / 100.0);
  }

  SUBCASE("no coupling, no photon") {
    model::SystemParams uncoupled = params;
    uncoupled.cavity.g0 = 0.0;
    CHECK(simulate_cycle(seq, uncoupled)[0].value <= 1.0e-12);
  }

  SUBCASE("coupling cycle adds the reference transmission") {
    const PulseSequence cm = coupling_measurement_sequence(config);
    const std::vector<GateReading> cm_readings = simulate_cycle(cm, params);
    REQUIRE(cm_readings.size() == 2);

    // reference gate: bare-cavity Lorentzian met at minus the detuning
    CHECK(cm_readings[0].transmission);
    const double ratio = 2.0 * params.cavity.detuning / params.cavity.kappa;
    CHECK(cm_readings[0].value == Approx(1.0 / (1.0 + ratio * ratio)).epsilon(1e-12));

    // signal gate: same probe conditions as the standing-wave cycle
    CHECK(!cm_readings[1].transmission);
    CHECK(cm_readings[1].value == Approx(direct).epsilon(1e-12));
  }

  SUBCASE("a localisation spread perturbs the probe reading only mildly") {
    std::vector<localize::PositionDistribution> dists(seq.phases.size());
    dists[2].mean = 0.25 * params.cavity.wavelength;
    dists[2].sigma_thermal = 10.0e-9;
    const double smeared = simulate_cycle(seq, params, dists)[0].value;
    CHECK(smeared > 0.0);
    CHECK(smeared == Approx(readings[0].value).epsilon(0.05));
  }

  SUBCASE("gates in transit are rejected") {
    PulseSequence bad = seq;
    bad.phases[2].ion_position = IonPosition::in_transit;
    CHECK_THROWS_WITH_AS(simulate_cycle(bad, params),
                         doctest::Contains("transit"), Error);
  }

  SUBCASE("distribution lists must cover every phase") {
    const std::vector<localize::PositionDistribution> short_list(2);
    CHECK_THROWS_WITH_AS(simulate_cycle(seq, params, short_list),
                         doctest::Contains("distribution per phase"), Error);
  }
}
