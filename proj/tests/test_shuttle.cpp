#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gsl/gsl_fft_real.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/shuttle.hpp"
#include "core/units.hpp"

using namespace icq;
using namespace icq::shuttle;
using icq::units::two_pi;

namespace {

// Oracle: leakage through a mixed-radix real FFT on a zero-padded 1 ns grid,
// sized so omega falls exactly on a frequency bin.  The direct sum in
// spectral_leakage only differs by a global phase, so the magnitudes must
// agree to rounding.
double fft_leakage(const std::vector<WaveformSample>& wf, double omega,
                   std::size_t padded) {
  std::vector<double> v(padded, 0.0);
  REQUIRE(wf.size() - 1 < padded);
  double peak = 0.0;
  for (std::size_t i = 0; i + 1 < wf.size(); ++i) {
    v[i] = wf[i + 1].voltage - wf[i].voltage;
    peak = std::max(peak, std::abs(wf[i + 1].voltage - wf[0].voltage));
  }
  const double dt = wf[1].time - wf[0].time;
  const double bin_exact = omega * static_cast<double>(padded) * dt / two_pi;
  const auto bin = static_cast<std::size_t>(std::llround(bin_exact));
  REQUIRE(std::abs(bin_exact - static_cast<double>(bin)) < 1e-9);

  gsl_fft_real_wavetable* table = gsl_fft_real_wavetable_alloc(padded);
  gsl_fft_real_workspace* work = gsl_fft_real_workspace_alloc(padded);
  gsl_fft_real_transform(v.data(), 1, padded, table, work);
  gsl_fft_real_workspace_free(work);
  gsl_fft_real_wavetable_free(table);
  // halfcomplex layout: re(m) at 2m-1, im(m) at 2m for 1 <= m < N/2
  const double re = v[2 * bin - 1];
  const double im = v[2 * bin];
  return std::hypot(re, im) / peak;
}

std::vector<WaveformSample> step_waveform(double amplitude, double dt, int n_before,
                                          int n_after) {
  std::vector<WaveformSample> wf;
  for (int k = 0; k < n_before + n_after; ++k) {
    wf.push_back({k * dt, k < n_before ? 0.0 : amplitude});
  }
  return wf;
}

} // namespace

TEST_CASE("Blackman-Nuttall window: peak, edges, symmetry, unimodality") {
  const double T = 2e-6;
  SUBCASE("peak value is the coefficient sum, exactly 1") {
    CHECK(bnw(T / 2.0, T) == doctest::Approx(1.0000000).epsilon(1e-9));
  }
  SUBCASE("edge value is the alternating coefficient sum") {
    CHECK(bnw(0.0, T) == doctest::Approx(3.628e-4).epsilon(1e-9));
    CHECK(bnw(T, T) == doctest::Approx(3.628e-4).epsilon(1e-9));
  }
  SUBCASE("mirror symmetry about the centre") {
    for (int i = 0; i <= 100; ++i) {
      const double t = T * i / 100.0;
      CHECK(bnw(t, T) == doctest::Approx(bnw(T - t, T)).epsilon(1e-12));
    }
  }
  SUBCASE("nonnegative and unimodal") {
    const int n = 10001;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
      vals[i] = bnw(T * i / (n - 1), T);
      CHECK(vals[i] >= 0.0);
    }
    const auto peak = std::max_element(vals.begin(), vals.end()) - vals.begin();
    for (auto i = 1; i <= peak; ++i) CHECK(vals[i] >= vals[i - 1] - 1e-15);
    for (auto i = peak + 1; i < n; ++i) CHECK(vals[i] <= vals[i - 1] + 1e-15);
  }
  SUBCASE("outside the window is a domain error") {
    CHECK_THROWS_WITH_AS(bnw(-0.1 * T, T), doctest::Contains("outside"), Error);
    CHECK_THROWS_WITH_AS(bnw(1.1 * T, T), doctest::Contains("outside"), Error);
  }
}

TEST_CASE("waveform generation: shape, plateau, continuity, electrode pair") {
  ShuttlePulse pulse; // defaults: 2 V, rise 1 us, hold 2 us, fall 2 us, 1 GHz
  const auto wf = generate_waveform(pulse);

  SUBCASE("edges start and end near zero") {
    CHECK(std::abs(wf.front().voltage) < 1e-3 * pulse.amplitude);
    CHECK(std::abs(wf.back().voltage) < 1e-3 * pulse.amplitude);
  }
  SUBCASE("every hold sample sits exactly at the amplitude") {
    int held = 0;
    for (const auto& s : wf) {
      if (s.time >= pulse.rise_time - 1e-15 &&
          s.time <= pulse.rise_time + pulse.hold_time + 1e-15) {
        CHECK(s.voltage == pulse.amplitude);
        ++held;
      }
    }
    CHECK(held > 1000);
  }
  SUBCASE("adjacent samples move by less than 10x the mean rise slope") {
    const double bound =
        pulse.amplitude * 10.0 / (pulse.sample_rate * pulse.rise_time);
    for (std::size_t i = 1; i < wf.size(); ++i) {
      CHECK(std::abs(wf[i].voltage - wf[i - 1].voltage) < bound);
    }
  }
  SUBCASE("opposite electrode is the exact negation") {
    const auto mirror = opposite_electrode(wf);
    REQUIRE(mirror.size() == wf.size());
    for (std::size_t i = 0; i < wf.size(); ++i) {
      CHECK(wf[i].voltage + mirror[i].voltage == 0.0);
      CHECK(mirror[i].time == wf[i].time);
    }
  }
  SUBCASE("zero amplitude gives an all-zero waveform") {
    pulse.amplitude = 0.0;
    for (const auto& s : generate_waveform(pulse)) CHECK(s.voltage == 0.0);
  }
  SUBCASE("undersampled segments are rejected") {
    pulse.sample_rate = 1e6; // one sample over the 1 us rise
    CHECK_THROWS_WITH_AS(generate_waveform(pulse), doctest::Contains("undersampled"),
                         Error);
  }
  SUBCASE("documented: the flank is steeper than a 2x linear ramp") {
    // The window buys its spectral purity with a steeper mid-flank: the peak
    // slope is ~2.09x a linear ramp of the same rise time, so "gentler than
    // twice the ramp" is false -- what it wins is leakage, tested below.
    double steepest = 0.0;
    for (std::size_t i = 1; i < wf.size(); ++i) {
      if (wf[i].time > pulse.rise_time) break;
      steepest = std::max(steepest,
                          std::abs(wf[i].voltage - wf[i - 1].voltage) *
                              pulse.sample_rate);
    }
    const double ramp_slope = pulse.amplitude / pulse.rise_time;
    CHECK(steepest > 2.0 * ramp_slope);
    CHECK(steepest < 2.2 * ramp_slope);
  }
}

TEST_CASE("spectral leakage: step and constant anchors, FFT oracle agreement") {
  const double omega = two_pi * 2.73e6; // axial secular frequency
  const double dt = 1e-9;

  SUBCASE("a rectangular step leaks exactly its full displacement") {
    const auto step = step_waveform(1.7, dt, 1000, 1001);
    CHECK(spectral_leakage(step, omega) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a constant profile does not leak at any frequency") {
    std::vector<WaveformSample> flat;
    for (int k = 0; k < 2001; ++k) flat.push_back({k * dt, 0.7});
    CHECK(spectral_leakage(flat, omega) == 0.0);
    CHECK(spectral_leakage(flat, 3.0 * omega) == 0.0);
  }
  SUBCASE("direct sum matches the padded-FFT oracle on a full pulse") {
    ShuttlePulse pulse;
    pulse.hold_time = 0.0;
    pulse.fall_time = pulse.rise_time;
    const auto wf = generate_waveform(pulse);
    // 100000 bins of 10 kHz put 2.73 MHz exactly on bin 273
    const double via_fft = fft_leakage(wf, omega, 100000);
    CHECK(spectral_leakage(wf, omega) == doctest::Approx(via_fft).epsilon(1e-9));
  }
  SUBCASE("too short a record is a resolution error") {
    const auto step = step_waveform(1.0, dt, 200, 200); // 0.4 us < 2 periods
    CHECK_THROWS_WITH_AS(spectral_leakage(step, omega), doctest::Contains("two periods"),
                         Error);
  }
}

TEST_CASE("adiabaticity: round-trip pulse beats a step by 10^3 and improves with "
          "rise time") {
  const double omega = two_pi * 2.73e6;
  // Leakage of the complete round trip (rise + fall, no hold): the pulse is
  // then smooth everywhere and inherits the window's sidelobe suppression.
  // Cutting it at the plateau would stop the acceleration mid-window and
  // leak ~4e-2 regardless of shape -- the hold subcase below pins that down.
  const auto leak_at = [&](double rise) {
    ShuttlePulse pulse;
    pulse.rise_time = rise;
    pulse.fall_time = rise;
    pulse.hold_time = 0.0;
    return spectral_leakage(generate_waveform(pulse), omega);
  };

  SUBCASE("1 us rise beats the rectangular step by >= 10^3") {
    const double leak = leak_at(1.0e-6);
    CHECK(leak == doctest::Approx(8.168914e-4).epsilon(0.01));
    CHECK(leak < 1e-3); // the default adiabaticity threshold
    const auto step = step_waveform(1.0, 1e-9, 1000, 1001);
    const double step_leak = spectral_leakage(step, omega);
    CHECK(step_leak / leak >= 1e3);
  }
  SUBCASE("leakage falls monotonically as the rise time grows") {
    const double l05 = leak_at(0.5e-6);
    const double l10 = leak_at(1.0e-6);
    const double l20 = leak_at(2.0e-6);
    CHECK(l05 == doctest::Approx(2.166160e-1).epsilon(0.01));
    CHECK(l10 == doctest::Approx(8.168914e-4).epsilon(0.01));
    CHECK(l20 == doctest::Approx(1.316004e-4).epsilon(0.01));
    CHECK(l05 > l10);
    CHECK(l10 > l20);
  }
  SUBCASE("documented: holding at the plateau reintroduces the arrival jerk") {
    ShuttlePulse pulse;
    pulse.rise_time = 1.0e-6;
    pulse.fall_time = 1.0e-6;
    pulse.hold_time = 0.3e-6;
    const double with_hold = spectral_leakage(generate_waveform(pulse), omega);
    CHECK(with_hold == doctest::Approx(4.668754e-2).epsilon(0.02));
    CHECK(with_hold > 10.0 * leak_at(1.0e-6));
  }
}

TEST_CASE("voltage-to-displacement calibration") {
  Calibration cal; // 108.25 nm/V
  SUBCASE("zero volts, zero displacement") { CHECK(displacement(0.0, cal) == 0.0); }
  SUBCASE("2 V moves node to antinode") {
    CHECK(displacement(2.0, cal) == doctest::Approx(216.5e-9).epsilon(1e-12));
  }
  SUBCASE("linear and sign-preserving") {
    CHECK(displacement(2.4, cal) == doctest::Approx(2.0 * displacement(1.2, cal)));
    CHECK(displacement(-1.2, cal) == doctest::Approx(-displacement(1.2, cal)));
  }
  SUBCASE("nonpositive alpha is rejected") {
    cal.alpha = 0.0;
    CHECK_THROWS_WITH_AS(displacement(1.0, cal), doctest::Contains("alpha"), Error);
  }
}
