#include "shuttle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "error.hpp"
#include "units.hpp"

namespace icq::shuttle {

namespace {
constexpr double kBnwCoef[4] = {0.3635819, 0.4891775, 0.1365995, 0.0106411};
} // namespace

double bnw(double t, double T) {
  require(T > 0.0, "bnw: window length must be positive");
  if (!(t >= 0.0 && t <= T)) {
    throw_validation("bnw: t = " + std::to_string(t) + " outside the window [0, " +
                     std::to_string(T) + "]");
  }
  const double phase = units::two_pi * t / T;
  double acc = 0.0;
  double sign = 1.0;
  for (int j = 0; j < 4; ++j) {
    acc += sign * kBnwCoef[j] * std::cos(j * phase);
    sign = -sign;
  }
  return acc;
}

void ShuttlePulse::validate() const {
  require(std::isfinite(amplitude), "shuttle pulse: non-finite amplitude");
  require(rise_time >= 0.0 && hold_time >= 0.0 && fall_time >= 0.0,
          "shuttle pulse: negative segment duration");
  require(sample_rate > 0.0, "shuttle pulse: sample rate must be positive");
  require(rise_time + hold_time + fall_time > 0.0, "shuttle pulse: zero total duration");
  for (double seg : {rise_time, hold_time, fall_time}) {
    if (seg > 0.0 && sample_rate * seg < 20.0) {
      throw_validation("shuttle pulse: undersampled segment (" +
                       std::to_string(sample_rate * seg) +
                       " samples, need >= 20); raise the sample rate");
    }
  }
}

void Calibration::validate() const {
  require(std::isfinite(alpha) && alpha > 0.0,
          "shuttle calibration: alpha must be positive");
}

std::vector<WaveformSample> generate_waveform(const ShuttlePulse& pulse) {
  pulse.validate();
  const double dt = 1.0 / pulse.sample_rate;
  const auto count = [&](double seg) {
    return static_cast<long>(std::llround(seg * pulse.sample_rate));
  };
  const long n_rise = count(pulse.rise_time);
  const long n_hold = count(pulse.hold_time);
  const long n_fall = count(pulse.fall_time);

  std::vector<WaveformSample> wf;
  wf.reserve(static_cast<std::size_t>(n_rise + n_hold + n_fall + 1));
  for (long k = 0; k <= n_rise + n_hold + n_fall; ++k) {
    const double t = k * dt;
    double v = pulse.amplitude; // hold plateau
    if (k < n_rise) {
      // first half of a window twice the rise time: ~0 at t=0, 1 at the end
      v = pulse.amplitude * bnw(t, 2.0 * pulse.rise_time);
    } else if (k > n_rise + n_hold) {
      // second half of a window twice the fall time: 1 at the start, ~0 at
      // the end; clamped because k*dt can overshoot the window by a rounding
      // error at the last sample
      const double u = t - (n_rise + n_hold) * dt;
      v = pulse.amplitude * bnw(std::min(pulse.fall_time + u, 2.0 * pulse.fall_time),
                                2.0 * pulse.fall_time);
    }
    wf.push_back({t, v});
  }
  return wf;
}

std::vector<WaveformSample> opposite_electrode(const std::vector<WaveformSample>& wf) {
  std::vector<WaveformSample> out = wf;
  for (auto& s : out) s.voltage = -s.voltage;
  return out;
}

double spectral_leakage(const std::vector<WaveformSample>& waveform, double omega) {
  require(waveform.size() >= 2, "spectral leakage: need at least 2 samples");
  require(omega > 0.0, "spectral leakage: omega must be positive");
  for (std::size_t i = 0; i + 1 < waveform.size(); ++i) {
    require(waveform[i + 1].time > waveform[i].time,
            "spectral leakage: sample times must be strictly increasing");
  }
  const double duration = waveform.back().time - waveform.front().time;
  if (duration * omega < 2.0 * units::two_pi) {
    throw_validation("spectral leakage: waveform spans " + std::to_string(duration) +
                     " s but at least two periods of omega (" +
                     std::to_string(2.0 * units::two_pi / omega) +
                     " s) are needed to resolve it");
  }

  std::complex<double> num(0.0, 0.0);
  double peak = 0.0;
  const double v0 = waveform.front().voltage;
  for (std::size_t i = 0; i + 1 < waveform.size(); ++i) {
    const double dv = waveform[i + 1].voltage - waveform[i].voltage;
    const double t_mid = 0.5 * (waveform[i].time + waveform[i + 1].time);
    num += dv * std::exp(std::complex<double>(0.0, -omega * t_mid));
    peak = std::max(peak, std::abs(waveform[i + 1].voltage - v0));
  }
  if (peak == 0.0) return 0.0; // constant profile: nothing moves
  return std::abs(num) / peak;
}

double displacement(double volts, const Calibration& cal) {
  cal.validate();
  require(std::isfinite(volts), "displacement: non-finite voltage");
  return cal.alpha * volts;
}

} // namespace icq::shuttle
