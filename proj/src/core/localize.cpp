#include "localize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "error.hpp"
#include "fitlm.hpp"
#include "interp.hpp"
#include "quad.hpp"
#include "units.hpp"

namespace icq::localize {

double thermal_sigma(double temperature, const model::TrapParams& trap) {
  trap.validate();
  require(temperature >= 0.0, "thermal_sigma: temperature must be >= 0");
  return std::sqrt(units::k_boltzmann * temperature /
                   (trap.mass * trap.omega_axial * trap.omega_axial));
}

double spread(double sigma) {
  require(sigma >= 0.0, "spread: sigma must be >= 0");
  return std::sqrt(2.0) * sigma;
}

double temperature_from_spread(double spread_value, const model::TrapParams& trap) {
  trap.validate();
  require(spread_value >= 0.0, "temperature_from_spread: spread must be >= 0");
  const double sigma = spread_value / std::sqrt(2.0);
  return sigma * sigma * trap.mass * trap.omega_axial * trap.omega_axial /
         units::k_boltzmann;
}

double micromotion_sigma(double x0, const model::TrapParams& trap) {
  trap.validate();
  require(std::isfinite(x0), "micromotion_sigma: x0 must be finite");
  return 0.5 * trap.q_param * std::abs(x0);
}

double PositionDistribution::total_sigma() const {
  return std::hypot(sigma_thermal, sigma_micromotion);
}

void PositionDistribution::validate() const {
  require(std::isfinite(mean), "position distribution: non-finite mean");
  require(sigma_thermal >= 0.0, "position distribution: negative thermal width");
  require(sigma_micromotion >= 0.0, "position distribution: negative micromotion width");
  require(std::isfinite(x0), "position distribution: non-finite x0");
}

PositionDistribution PositionDistribution::thermal(double mean, double temperature,
                                                   const model::TrapParams& trap) {
  PositionDistribution d;
  d.mean = mean;
  d.sigma_thermal = thermal_sigma(temperature, trap);
  return d;
}

PositionDistribution PositionDistribution::with_micromotion(double mean,
                                                            double temperature, double x0,
                                                            const model::TrapParams& trap) {
  PositionDistribution d = thermal(mean, temperature, trap);
  d.x0 = x0;
  d.sigma_micromotion = micromotion_sigma(x0, trap);
  return d;
}

double smear(const std::function<double(double)>& curve,
             const PositionDistribution& dist) {
  dist.validate();
  const double sigma = dist.total_sigma();
  if (sigma == 0.0) return curve(dist.mean);
  try {
    return quad::gaussian_average_adaptive(curve, dist.mean, sigma);
  } catch (const Error&) {
    // Hermite order doubling stalls when the curve has derivative kinks
    // (an interpolated emission curve folds |sin| into the position axis);
    // subdividing around the kinks converges where raising the order cannot.
  }
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * units::pi));
  auto integrand = [&](double x) {
    const double t = (x - dist.mean) / sigma;
    return norm * std::exp(-0.5 * t * t) * curve(x);
  };
  // a coarse Hermite pass sets the absolute error scale for the subdivision
  const double scale = std::abs(quad::gaussian_average(curve, dist.mean, sigma, 21));
  const double half = 8.5 * sigma; // leaves < 1e-16 of the Gaussian mass outside
  return quad::adaptive_simpson(integrand, dist.mean - half, dist.mean + half,
                                1e-10 * scale + 1e-17);
}

double effective_coupling(double g0, double sigma, double wavenumber,
                          CouplingMoment moment) {
  require(g0 >= 0.0, "effective_coupling: g0 must be >= 0");
  require(sigma >= 0.0, "effective_coupling: sigma must be >= 0");
  require(wavenumber > 0.0, "effective_coupling: wavenumber must be positive");
  const double k2s2 = wavenumber * wavenumber * sigma * sigma;
  switch (moment) {
    case CouplingMoment::first:
      return g0 * std::exp(-0.5 * k2s2);
    case CouplingMoment::second:
      return g0 * std::sqrt(0.5 * (1.0 + std::exp(-2.0 * k2s2)));
  }
  throw_validation("effective_coupling: unknown moment");
}

namespace {

// The emission curve is periodic in position (period lambda/2) and even
// about every node, so it expands in cos(2mkx); a Gaussian of width sigma
// then damps each harmonic by exp(-2 m^2 k^2 sigma^2).  That makes the
// smear analytic in (mean, sigma) - the fitted model stays smooth in its
// parameters - and only the few harmonics the Gaussian leaves alive cost
// anything.  Used for the module's own emission-curve smears; the generic
// smear() above handles arbitrary curves.
class HarmonicSmear {
public:
  explicit HarmonicSmear(const model::EmissionCurve& curve) : k_(curve.wavenumber()) {
    const double half_period = units::pi / k_;
    std::array<double, kSamples> sample{};
    for (int j = 0; j < kSamples; ++j) {
      sample[static_cast<std::size_t>(j)] =
          curve.at_position(half_period * j / kSamples);
    }
    coef_.assign(kHarmonics + 1, 0.0);
    for (int j = 0; j < kSamples; ++j) {
      const double theta = units::two_pi * j / kSamples;
      const double step = std::cos(theta);
      double prev = 1.0;  // cos(0 theta)
      double cur = step;  // cos(1 theta)
      coef_[0] += sample[static_cast<std::size_t>(j)];
      for (int m = 1; m <= kHarmonics; ++m) {
        coef_[static_cast<std::size_t>(m)] += sample[static_cast<std::size_t>(j)] * cur;
        const double next = 2.0 * step * cur - prev; // Chebyshev recurrence
        prev = cur;
        cur = next;
      }
    }
    coef_[0] /= kSamples;
    for (int m = 1; m <= kHarmonics; ++m) coef_[static_cast<std::size_t>(m)] *= 2.0 / kSamples;
  }

  double value(double mean, double sigma) const {
    const double phase = 2.0 * k_ * mean;
    const double damp = 2.0 * k_ * k_ * sigma * sigma;
    const double step = std::cos(phase);
    double prev = 1.0;
    double cur = step;
    double acc = coef_[0];
    for (int m = 1; m <= kHarmonics; ++m) {
      const double weight = std::exp(-damp * m * m);
      if (weight < 1e-14) break;
      acc += coef_[static_cast<std::size_t>(m)] * weight * cur;
      const double next = 2.0 * step * cur - prev;
      prev = cur;
      cur = next;
    }
    return acc;
  }

private:
  static constexpr int kSamples = 8192;
  static constexpr int kHarmonics = 2048;
  double k_;
  std::vector<double> coef_;
};

// model value at a control coordinate for parameter vector
// (x_scale, y_scale, sigma, x0)
double sw_model(const HarmonicSmear& smeared, const model::TrapParams& trap, double ctrl,
                const Eigen::VectorXd& p) {
  const double x = p[0] * ctrl;
  const double sigma = std::hypot(p[2], 0.5 * trap.q_param * (x - p[3]));
  return p[1] * smeared.value(x, sigma);
}

} // namespace

void StandingWaveScan::validate() const {
  require(!points.empty(), "standing-wave scan: no points");
  double max_val = 0.0;
  for (const auto& p : points) {
    require(std::isfinite(p.position) && std::isfinite(p.emission),
            "standing-wave scan: non-finite entry");
    require(p.stderr_ >= 0.0, "standing-wave scan: negative stderr");
    max_val = std::max(max_val, p.emission);
  }
  if (normalised) {
    require(std::abs(max_val - 1.0) <= 1e-9,
            "standing-wave scan: normalised flag set but maximum is not 1");
  }
}

StandingWaveScan standing_wave_scan(const std::vector<double>& positions,
                                    const model::SystemParams& params,
                                    const PositionDistribution& dist,
                                    const ScanOptions& options) {
  require(!positions.empty(), "standing-wave scan: positions must be non-empty");
  dist.validate();
  const model::EmissionCurve curve(params, options.duration, options.curve_samples,
                                   options.tol);
  const double sigma = dist.total_sigma();
  StandingWaveScan scan;
  scan.points.reserve(positions.size());
  if (sigma == 0.0) {
    // direct evaluation keeps the node zeros exact
    for (double x : positions) scan.points.push_back({x, curve.at_position(x), 0.0});
  } else {
    const HarmonicSmear smeared(curve);
    for (double x : positions) scan.points.push_back({x, smeared.value(x, sigma), 0.0});
  }
  if (options.normalise) {
    double peak = 0.0;
    for (const auto& p : scan.points) peak = std::max(peak, p.emission);
    require(peak > 0.0, "standing-wave scan: cannot normalise an all-zero scan");
    for (auto& p : scan.points) p.emission /= peak;
    scan.normalised = true;
  }
  scan.validate();
  return scan;
}


StandingWaveFit fit_standing_wave(const StandingWaveScan& data,
                                  const model::SystemParams& params,
                                  const SwFitOptions& options) {
  data.validate();
  params.validate();
  const std::size_t n = data.points.size();
  require(n >= 8, "standing-wave fit: need at least 8 points, got " + std::to_string(n));

  std::vector<double> ctrl(n), y(n), w(n, 1.0);
  double y_max = -1e300, y_min = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    ctrl[i] = data.points[i].position;
    y[i] = data.points[i].emission;
    y_max = std::max(y_max, y[i]);
    y_min = std::min(y_min, y[i]);
  }
  bool any_pos = false, any_zero = false;
  for (const auto& p : data.points) (p.stderr_ > 0.0 ? any_pos : any_zero) = true;
  if (any_pos && any_zero) {
    throw_validation("standing-wave fit: stderrs must be uniformly zero or positive");
  }
  if (any_pos) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 1.0 / (data.points[i].stderr_ * data.points[i].stderr_);
    }
  }
  if (!(y_max - y_min > 1e-12 * std::abs(y_max))) {
    throw_numerical("standing-wave fit: flat scan, parameters unidentifiable");
  }

  const model::EmissionCurve curve(params, options.duration, options.curve_samples,
                                   options.curve_tol);
  const HarmonicSmear smeared(curve);
  const double period = params.cavity.node_spacing();
  const double ctrl_lo = *std::min_element(ctrl.begin(), ctrl.end());
  const double ctrl_hi = *std::max_element(ctrl.begin(), ctrl.end());
  const double ctrl_span = ctrl_hi - ctrl_lo;
  require(ctrl_span > 0.0, "standing-wave fit: zero position span");

  // the model peak near an antinode sets the count scale
  const double model_peak = curve.at_position(period / 2.0);
  require(model_peak > 0.0, "standing-wave fit: model emission is identically zero");

  fit::ResidualFn residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = std::sqrt(w[i]) * (sw_model(smeared, params.trap, ctrl[i], p) - y[i]);
    }
    return r;
  };

  // The position scale is pinned by brute force before the descent: the
  // periodic model is slid across the data on a log grid of candidate scales
  // (5% steps, from one period per span up to four points per period) with
  // the amplitude solved in closed form at each.  Matching the periodicity
  // directly sidesteps counting dips, which 2% noise fragments once the dips
  // are shallow.
  const double ctrl_mid = 0.5 * (ctrl_lo + ctrl_hi);
  const double xs_lo = period / ctrl_span;
  const double xs_hi =
      std::max(1.3 * xs_lo,
               period * static_cast<double>(n - 1) / (4.0 * ctrl_span));
  double x_scale0 = xs_lo;
  double y_scale0 = (y_max - y_min) / model_peak;
  double probe_best = 1e300;
  for (double xs = xs_lo; xs <= 1.0001 * xs_hi; xs *= 1.05) {
    Eigen::VectorXd p(4);
    p << xs, 1.0, 30e-9, xs * ctrl_mid;
    double num = 0.0, den = 0.0;
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = sw_model(smeared, params.trap, ctrl[i], p);
      num += w[i] * m[i] * y[i];
      den += w[i] * m[i] * m[i];
    }
    if (!(den > 0.0)) continue;
    const double ys = num / den;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = y[i] - ys * m[i];
      chi2 += w[i] * d * d;
    }
    if (chi2 < probe_best && ys > 0.0) {
      probe_best = chi2;
      x_scale0 = xs;
      y_scale0 = ys;
    }
  }

  std::mt19937 rng(20260822);
  fit::LMResult best;
  best.chi2 = 1e300;
  double second_chi2 = 1e300;
  bool have_fit = false;
  // the probe pins the scale to ~5%; the deterministic bracket plus jittered
  // restarts cover the residual uncertainty
  const double seeds[3] = {1.0, 0.94, 1.06};
  std::uniform_real_distribution<double> jitter(0.85, 1.18);
  for (int attempt = 0; attempt < 3 + options.restarts; ++attempt) {
    Eigen::VectorXd p0(4);
    const double xs_seed = x_scale0 * (attempt < 3 ? seeds[attempt] : jitter(rng));
    const double sg_seed = attempt < 3 ? 30e-9 : 30e-9 * jitter(rng);
    p0 << xs_seed, y_scale0, sg_seed, xs_seed * ctrl_mid;
    fit::LMOptions lm;
    lm.step_scale = Eigen::Vector4d(0.02 * x_scale0, 0.1 * y_scale0, 10e-9, 20e-9);
    lm.ftol = 1e-10;
    lm.xtol = 1e-10;
    try {
      const fit::LMResult r = fit::levenberg_marquardt(residuals, p0, lm);
      // reject nonphysical minima (mirrored or collapsed axes) instead of
      // letting them shadow a good restart
      if (r.converged && r.params[0] > 0.0 && r.params[1] > 0.0) {
        if (r.chi2 < best.chi2) {
          second_chi2 = best.chi2;
          best = r;
          have_fit = true;
        } else {
          second_chi2 = std::min(second_chi2, r.chi2);
        }
      }
    } catch (const Error&) {
      // a bad start can wander into non-finite territory; restart
    }
    if (!have_fit) continue;
    // a perfect fit cannot be improved on, and once every deterministic seed
    // has run, two starts agreeing on the same chi-square settle the minimum
    if (best.chi2 < 1e-16 * static_cast<double>(n)) break;
    if (attempt >= 2 && second_chi2 - best.chi2 <= 0.01 * best.chi2) break;
  }
  if (!have_fit) {
    throw_numerical("standing-wave fit did not converge after " +
                    std::to_string(3 + options.restarts) + " starts");
  }

  StandingWaveFit out;
  out.x_scale = best.params[0];
  out.y_scale = best.params[1];
  out.sigma = std::abs(best.params[2]);
  out.x0 = best.params[3];
  out.residual = std::sqrt(best.chi2 / static_cast<double>(n));
  out.covariance = best.covariance;
  require(out.x_scale > 0.0, "standing-wave fit: non-positive x scale");
  require(out.y_scale > 0.0, "standing-wave fit: non-positive y scale");
  return out;
}

double visibility(const StandingWaveScan& scan) {
  scan.validate();
  const std::size_t n = scan.points.size();
  if (n < 2) {
    throw_validation("visibility: need at least 2 points");
  }
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = scan.points[i].position;
    y[i] = scan.points[i].emission;
  }
  for (std::size_t i = 1; i < n; ++i) {
    require(x[i] > x[i - 1], "visibility: positions must be strictly increasing");
  }
  const interp::CubicHermite fitcurve(x, y, interp::CubicHermite::Slopes::pchip);
  double vmax = -1e300, vmin = 1e300;
  const int dense = 40 * static_cast<int>(n);
  for (int i = 0; i <= dense; ++i) {
    const double xi = x.front() + (x.back() - x.front()) * i / dense;
    const double v = fitcurve(xi);
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  if (!(vmax + vmin > 0.0)) {
    throw_numerical("visibility: max + min is not positive, visibility undefined");
  }
  return (vmax - vmin) / (vmax + vmin);
}

} // namespace icq::localize
