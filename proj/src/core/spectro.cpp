#include "spectro.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "fitlm.hpp"
#include "interp.hpp"
#include "parallel.hpp"
#include "units.hpp"

namespace icq::spectro {

namespace {

double mhz(double rad_per_s) { return rad_per_s / (units::two_pi * 1e6); }

// Uniform weights when every stderr is zero, 1/sigma^2 when every stderr is
// positive; a mixture has no defensible weighting.
std::vector<double> weights_from_stderrs(const std::vector<double>& sigmas,
                                         const char* what) {
  const bool any_zero = std::any_of(sigmas.begin(), sigmas.end(),
                                    [](double s) { return s == 0.0; });
  const bool any_positive = std::any_of(sigmas.begin(), sigmas.end(),
                                        [](double s) { return s > 0.0; });
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw_validation(std::string(what) + ": stderr must be >= 0");
  }
  if (any_zero && any_positive) {
    throw_validation(std::string(what) +
                     ": stderrs must be uniformly zero or uniformly positive");
  }
  std::vector<double> w(sigmas.size(), 1.0);
  if (any_positive) {
    for (std::size_t i = 0; i < sigmas.size(); ++i) w[i] = 1.0 / (sigmas[i] * sigmas[i]);
  }
  return w;
}

double lorentzian(double x, double center, double fwhm, double amplitude, double offset) {
  const double u = 2.0 * (x - center) / fwhm;
  return offset + amplitude / (1.0 + u * u);
}

} // namespace

void RamanScan::validate() const {
  if (points.size() < 8) {
    throw_validation("raman scan: need at least 8 points, got " +
                     std::to_string(points.size()));
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].cavity_detuning > points[i - 1].cavity_detuning)) {
      throw_validation("raman scan: cavity detunings must be strictly increasing");
    }
  }
  std::vector<double> sigmas;
  sigmas.reserve(points.size());
  for (const auto& p : points) sigmas.push_back(p.stderr_);
  weights_from_stderrs(sigmas, "raman scan");
}

RamanScan raman_scan(double probe_detuning, const std::vector<double>& cavity_detunings,
                     const model::SystemParams& params, double tol, double duration) {
  model::SystemParams p = params;
  p.validate();
  p.lasers.at(0).detuning = probe_detuning;
  RamanScan scan;
  scan.probe_detuning = probe_detuning;
  scan.points.resize(cavity_detunings.size());
  for (std::size_t i = 0; i < cavity_detunings.size(); ++i) {
    p.cavity.detuning = cavity_detunings[i];
    scan.points[i] = {cavity_detunings[i], model::photon_probability(p, duration, tol), 0.0};
  }
  scan.validate();
  return scan;
}

LorentzianFitResult fit_lorentzian(const RamanScan& scan) {
  scan.validate();
  const std::size_t n = scan.points.size();
  std::vector<double> x(n), y(n), sigmas(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = scan.points[i].cavity_detuning;
    y[i] = scan.points[i].emission;
    sigmas[i] = scan.points[i].stderr_;
  }
  const std::vector<double> w = weights_from_stderrs(sigmas, "lorentzian fit");
  const bool weighted = sigmas.front() > 0.0;

  const std::size_t imax = static_cast<std::size_t>(
      std::max_element(y.begin(), y.end()) - y.begin());
  if (imax == 0 || imax == n - 1) {
    throw_numerical("lorentzian fit: no interior maximum (scan peaks at the window "
                    "boundary, index " +
                    std::to_string(imax) + ")");
  }

  const double offset0 = *std::min_element(y.begin(), y.end());
  const double amplitude0 = y[imax] - offset0;
  if (!(amplitude0 > 0.0)) {
    throw_numerical("lorentzian fit: flat scan, no peak to fit");
  }
  const double half = offset0 + 0.5 * amplitude0;
  // half-height crossings by linear interpolation outward from the maximum
  double left = x.front(), right = x.back();
  bool has_left = false, has_right = false;
  for (std::size_t i = imax; i-- > 0;) {
    if (y[i] <= half) {
      const double t = (half - y[i]) / (y[i + 1] - y[i]);
      left = x[i] + t * (x[i + 1] - x[i]);
      has_left = true;
      break;
    }
  }
  for (std::size_t i = imax + 1; i < n; ++i) {
    if (y[i] <= half) {
      const double t = (half - y[i - 1]) / (y[i] - y[i - 1]);
      right = x[i - 1] + t * (x[i] - x[i - 1]);
      has_right = true;
      break;
    }
  }
  const double span = x.back() - x.front();
  double fwhm0 = span / 2.0;
  if (has_left && has_right) {
    fwhm0 = right - left;
  } else if (has_left) {
    fwhm0 = 2.0 * (x[imax] - left);
  } else if (has_right) {
    fwhm0 = 2.0 * (right - x[imax]);
  }

  Eigen::VectorXd p0(4);
  p0 << x[imax], fwhm0, amplitude0, offset0;

  fit::ResidualFn residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = std::sqrt(w[i]) *
             (lorentzian(x[i], p[0], std::abs(p[1]), p[2], p[3]) - y[i]);
    }
    return r;
  };
  fit::LMOptions opts;
  opts.step_scale = Eigen::Vector4d(0.01 * span, 0.01 * span, 0.1 * amplitude0,
                                    0.1 * amplitude0);
  const fit::LMResult lm = fit::levenberg_marquardt(residuals, p0, opts);
  if (!lm.converged) {
    throw_numerical("lorentzian fit did not converge; residual chi2 = " +
                    std::to_string(lm.chi2));
  }

  LorentzianFitResult out;
  out.center = lm.params[0];
  out.fwhm = std::abs(lm.params[1]);
  out.amplitude = lm.params[2];
  out.offset = lm.params[3];
  out.covariance = lm.covariance;
  if (!(out.amplitude > 0.0) || !(out.fwhm > 0.0)) {
    throw_numerical("lorentzian fit collapsed to a degenerate line shape");
  }
  if (out.center < x.front() || out.center > x.back()) {
    throw_numerical("lorentzian fit: center " + std::to_string(mhz(out.center)) +
                    " MHz outside the scanned interval");
  }
  if (!weighted && n > 4) {
    out.covariance *= lm.chi2 / static_cast<double>(n - 4);
  }
  return out;
}

ShiftPoint raman_shift(const RamanScan& scan) {
  const LorentzianFitResult fit = fit_lorentzian(scan);
  ShiftPoint point;
  point.probe_detuning = scan.probe_detuning;
  point.shift = fit.center - scan.probe_detuning;
  point.stderr_ = std::sqrt(std::max(0.0, fit.covariance(0, 0)));
  return point;
}

ShiftMeasurement measure_shift(double probe_detuning, const model::SystemParams& params,
                               const ShiftOptions& options) {
  model::SystemParams p = params;
  p.validate();
  p.lasers.at(0).detuning = probe_detuning;
  if (options.scan_points < 8) {
    throw_validation("shift measurement: need at least 8 scan points");
  }
  if (options.max_recenter < 0) {
    throw_validation("shift measurement: max_recenter must be >= 0");
  }
  const double halfwidth = options.window_halfwidth > 0.0 ? options.window_halfwidth
                                                          : 3.0 * p.cavity.kappa;
  const int n = options.scan_points;
  const double step = 2.0 * halfwidth / (n - 1);

  // emission cache keyed by the window-grid index relative to the nominal
  // resonance; re-centred windows land on the same grid
  std::unordered_map<long long, double> cache;
  auto emission_at = [&](double dc) {
    const long long key = std::llround((dc - probe_detuning) / step);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    p.cavity.detuning = dc;
    const double v =
        model::photon_probability(p, options.duration, options.tol);
    cache.emplace(key, v);
    return v;
  };

  double center = probe_detuning;
  constexpr int kEdgeMargin = 2;
  for (int attempt = 0;; ++attempt) {
    std::vector<double> grid(n);
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
      grid[i] = center + (i - (n - 1) / 2.0) * step;
      vals[i] = emission_at(grid[i]);
    }
    const int imax = static_cast<int>(std::max_element(vals.begin(), vals.end()) -
                                      vals.begin());
    if (imax >= kEdgeMargin && imax <= n - 1 - kEdgeMargin) {
      ShiftMeasurement m;
      m.scan.probe_detuning = probe_detuning;
      m.scan.points.resize(n);
      for (int i = 0; i < n; ++i) m.scan.points[i] = {grid[i], vals[i], 0.0};
      m.fit = fit_lorentzian(m.scan);
      m.point.probe_detuning = probe_detuning;
      m.point.shift = m.fit.center - probe_detuning;
      m.point.stderr_ = std::sqrt(std::max(0.0, m.fit.covariance(0, 0)));
      return m;
    }
    if (attempt >= options.max_recenter) {
      std::ostringstream os;
      os << "raman peak not bracketed after " << attempt
         << " window re-centres (probe detuning " << mhz(probe_detuning)
         << " MHz, last window centre " << mhz(center) << " MHz)";
      throw_numerical(os.str());
    }
    center = grid[imax];
  }
}

void DeltaMap::validate() const {
  auto check_grid = [](const std::vector<double>& g, const char* name) {
    if (g.size() < 5) {
      throw_validation(std::string("delta map: ") + name +
                       " needs at least 5 points, got " + std::to_string(g.size()));
    }
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(g[i] > g[i - 1])) {
        throw_validation(std::string("delta map: ") + name +
                         " must be strictly ascending");
      }
    }
  };
  check_grid(g0_grid, "g0 grid");
  check_grid(probe_grid, "probe grid");
  if (delta.rows() != static_cast<Eigen::Index>(g0_grid.size()) ||
      delta.cols() != static_cast<Eigen::Index>(probe_grid.size())) {
    throw_validation("delta map: matrix shape " + std::to_string(delta.rows()) + "x" +
                     std::to_string(delta.cols()) + " does not match grids " +
                     std::to_string(g0_grid.size()) + "x" +
                     std::to_string(probe_grid.size()));
  }
  if (!delta.allFinite()) {
    throw_validation("delta map: non-finite entries");
  }
}

double DeltaMap::value(double g0, double probe_detuning) const {
  validate();
  if (g0 < g0_grid.front() || g0 > g0_grid.back()) {
    throw_validation("delta map: g0 = " + std::to_string(mhz(g0)) +
                     " MHz outside the map range [" + std::to_string(mhz(g0_grid.front())) +
                     ", " + std::to_string(mhz(g0_grid.back())) + "] MHz");
  }
  if (probe_detuning < probe_grid.front() || probe_detuning > probe_grid.back()) {
    throw_validation("delta map: probe detuning = " + std::to_string(mhz(probe_detuning)) +
                     " MHz outside the map range [" +
                     std::to_string(mhz(probe_grid.front())) + ", " +
                     std::to_string(mhz(probe_grid.back())) + "] MHz");
  }
  std::vector<double> along_g0(g0_grid.size());
  std::vector<double> row(probe_grid.size());
  for (std::size_t i = 0; i < g0_grid.size(); ++i) {
    for (std::size_t j = 0; j < probe_grid.size(); ++j) row[j] = delta(i, j);
    interp::CubicHermite rowfit(probe_grid, row, interp::CubicHermite::Slopes::pchip);
    along_g0[i] = rowfit(probe_detuning);
  }
  interp::CubicHermite colfit(g0_grid, along_g0, interp::CubicHermite::Slopes::central);
  return colfit(g0);
}

nlohmann::json DeltaMap::to_json() const {
  validate();
  nlohmann::json j;
  auto to_mhz = [](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double r) { return mhz(r); });
    return out;
  };
  j["g0_mhz"] = to_mhz(g0_grid);
  j["delta_p_mhz"] = to_mhz(probe_grid);
  std::vector<std::vector<double>> rows(g0_grid.size(),
                                        std::vector<double>(probe_grid.size()));
  for (std::size_t i = 0; i < g0_grid.size(); ++i) {
    for (std::size_t jj = 0; jj < probe_grid.size(); ++jj) rows[i][jj] = mhz(delta(i, jj));
  }
  j["delta_mhz"] = rows;
  return j;
}

DeltaMap DeltaMap::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw_validation("delta map json: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "g0_mhz" && key != "delta_p_mhz" && key != "delta_mhz") {
      throw_validation("delta map json: unknown key \"" + key + "\"");
    }
  }
  for (const char* key : {"g0_mhz", "delta_p_mhz", "delta_mhz"}) {
    if (!j.contains(key)) {
      throw_validation(std::string("delta map json: missing key \"") + key + "\"");
    }
  }
  DeltaMap map;
  auto from_mhz = [](const nlohmann::json& arr, const char* what) {
    if (!arr.is_array() || arr.empty()) {
      throw_validation(std::string("delta map json: ") + what +
                       " must be a non-empty array");
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) {
        throw_validation(std::string("delta map json: ") + what +
                         " must contain numbers only");
      }
      out.push_back(units::two_pi * 1e6 * v.get<double>());
    }
    return out;
  };
  map.g0_grid = from_mhz(j.at("g0_mhz"), "g0_mhz");
  map.probe_grid = from_mhz(j.at("delta_p_mhz"), "delta_p_mhz");
  const auto& rows = j.at("delta_mhz");
  if (!rows.is_array() || rows.size() != map.g0_grid.size()) {
    throw_validation("delta map json: delta_mhz must have one row per g0 value");
  }
  map.delta.resize(static_cast<Eigen::Index>(map.g0_grid.size()),
                   static_cast<Eigen::Index>(map.probe_grid.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != map.probe_grid.size()) {
      throw_validation("delta map json: delta_mhz row " + std::to_string(i) +
                       " must have one entry per probe detuning");
    }
    for (std::size_t jj = 0; jj < row.size(); ++jj) {
      if (!row[jj].is_number()) {
        throw_validation("delta map json: delta_mhz must contain numbers only");
      }
      map.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) =
          units::two_pi * 1e6 * row[jj].get<double>();
    }
  }
  map.validate();
  return map;
}

namespace {

// one map column: shift at every g0 for a fixed probe detuning
void evaluate_column(const std::vector<double>& g0_grid, double probe_detuning,
                     const model::SystemParams& params, const ShiftOptions& shift_options,
                     int threads, std::vector<double>& out) {
  out.resize(g0_grid.size());
  parallel_for(g0_grid.size(), threads, [&](std::size_t i) {
    model::SystemParams p = params;
    p.cavity.g0 = g0_grid[i];
    try {
      out[i] = measure_shift(probe_detuning, p, shift_options).point.shift;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "delta map node failed at g0 = " << mhz(g0_grid[i]) << " MHz, delta_p = "
         << mhz(probe_detuning) << " MHz: " << e.what();
      if (e.kind() == ErrorKind::validation) throw_validation(os.str());
      throw_numerical(os.str());
    }
  });
}

double max_adjacent_jump_of(const Eigen::MatrixXd& delta,
                            std::vector<std::size_t>* offending = nullptr,
                            double threshold = 0.0) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j + 1 < delta.cols(); ++j) {
    const double jump = (delta.col(j + 1) - delta.col(j)).cwiseAbs().maxCoeff();
    worst = std::max(worst, jump);
    if (offending && jump > threshold) offending->push_back(static_cast<std::size_t>(j));
  }
  return worst;
}

} // namespace

DeltaMap build_delta_map(const std::vector<double>& g0_grid,
                         const std::vector<double>& probe_grid,
                         const model::SystemParams& params, const MapOptions& options) {
  DeltaMap map;
  map.g0_grid = g0_grid;
  map.probe_grid = probe_grid;
  map.delta.resize(static_cast<Eigen::Index>(g0_grid.size()),
                   static_cast<Eigen::Index>(probe_grid.size()));
  map.delta.setZero();
  map.validate();
  model::SystemParams base = params;
  base.validate();
  for (double g0 : g0_grid) {
    if (!(g0 > 0.0)) throw_validation("delta map: g0 grid must be positive");
  }
  if (options.refine_rounds < 0) {
    throw_validation("delta map: refine_rounds must be >= 0");
  }
  const double threshold = options.refine_threshold > 0.0 ? options.refine_threshold
                                                          : units::two_pi * 1e6;

  std::vector<double> column;
  for (std::size_t j = 0; j < map.probe_grid.size(); ++j) {
    evaluate_column(map.g0_grid, map.probe_grid[j], base, options.shift, options.threads,
                    column);
    for (std::size_t i = 0; i < map.g0_grid.size(); ++i) {
      map.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = column[i];
    }
  }

  for (int round = 0; round < options.refine_rounds; ++round) {
    std::vector<std::size_t> offending;
    max_adjacent_jump_of(map.delta, &offending, threshold);
    if (offending.empty()) break;
    // insert midpoint columns right-to-left so stored indices stay valid
    for (auto it = offending.rbegin(); it != offending.rend(); ++it) {
      const std::size_t j = *it;
      const double mid = 0.5 * (map.probe_grid[j] + map.probe_grid[j + 1]);
      evaluate_column(map.g0_grid, mid, base, options.shift, options.threads, column);
      map.probe_grid.insert(map.probe_grid.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                            mid);
      Eigen::MatrixXd grown(map.delta.rows(), map.delta.cols() + 1);
      grown.leftCols(static_cast<Eigen::Index>(j) + 1) =
          map.delta.leftCols(static_cast<Eigen::Index>(j) + 1);
      for (std::size_t i = 0; i < map.g0_grid.size(); ++i) {
        grown(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j) + 1) = column[i];
      }
      grown.rightCols(map.delta.cols() - static_cast<Eigen::Index>(j) - 1) =
          map.delta.rightCols(map.delta.cols() - static_cast<Eigen::Index>(j) - 1);
      map.delta = std::move(grown);
    }
    map.refine_rounds_used = round + 1;
  }
  map.max_adjacent_jump = max_adjacent_jump_of(map.delta);
  map.validate();
  return map;
}

G0Fit fit_g0(const std::vector<ShiftPoint>& points, const DeltaMap& map) {
  map.validate();
  if (points.size() < 4) {
    throw_validation("g0 fit: need at least 4 shift points, got " +
                     std::to_string(points.size()));
  }
  std::vector<double> sigmas;
  sigmas.reserve(points.size());
  for (const auto& p : points) sigmas.push_back(p.stderr_);
  const std::vector<double> w = weights_from_stderrs(sigmas, "g0 fit");
  for (const auto& p : points) {
    if (p.probe_detuning < map.probe_grid.front() ||
        p.probe_detuning > map.probe_grid.back()) {
      throw_validation("g0 fit: probe detuning " + std::to_string(mhz(p.probe_detuning)) +
                       " MHz outside the map probe grid [" +
                       std::to_string(mhz(map.probe_grid.front())) + ", " +
                       std::to_string(mhz(map.probe_grid.back())) + "] MHz");
    }
  }

  const double lo = map.g0_grid.front();
  const double hi = map.g0_grid.back();
  const double range = hi - lo;
  auto chi2_at = [&](double g0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = points[i].shift - map.value(g0, points[i].probe_detuning);
      acc += w[i] * r * r;
    }
    return acc;
  };

  const fit::BrentResult best = fit::minimize_scalar(chi2_at, lo, hi, 1e-7 * range);
  if (best.x - lo < 1e-3 * range || hi - best.x < 1e-3 * range) {
    throw_numerical("g0 fit: optimum at the map boundary (g0 = " +
                    std::to_string(mhz(best.x)) + " MHz); extend the g0 grid");
  }

  // half-width of the chi2_min + 1 interval, per side, by bisection
  const double target = best.value + 1.0;
  auto crossing = [&](double inner, double outer) -> double {
    if (chi2_at(outer) < target) return -1.0; // no crossing inside the grid
    double a = inner, b = outer;
    for (int i = 0; i < 80; ++i) {
      const double m = 0.5 * (a + b);
      (chi2_at(m) < target ? a : b) = m;
    }
    return std::abs(0.5 * (a + b) - best.x);
  };
  const double up = crossing(best.x, hi);
  const double down = crossing(best.x, lo);
  double stderr_ = 0.0;
  if (up >= 0.0 && down >= 0.0) {
    stderr_ = 0.5 * (up + down);
  } else if (up >= 0.0) {
    stderr_ = up;
  } else if (down >= 0.0) {
    stderr_ = down;
  } else {
    // chi2 never rises by 1 inside the grid: fall back to the local curvature
    const double h = 1e-3 * range;
    const double d2 =
        (chi2_at(best.x + h) - 2.0 * best.value + chi2_at(best.x - h)) / (h * h);
    if (d2 > 0.0) {
      stderr_ = std::sqrt(2.0 / d2);
    } else {
      throw_numerical("g0 fit: chi2 is flat around the optimum; stderr undefined");
    }
  }

  return {best.x, stderr_, best.value};
}

} // namespace icq::spectro
