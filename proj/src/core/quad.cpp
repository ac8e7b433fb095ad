#include "quad.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include <Eigen/Dense>

#include "error.hpp"
#include "units.hpp"

namespace icq::quad {

namespace {

GaussHermite build_rule(int n) {
  // Jacobi matrix of the monic Hermite recurrence pi_{k+1} = t pi_k - (k/2) pi_{k-1}
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermite rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double mu0 = std::sqrt(units::pi);
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

} // namespace

const GaussHermite& gauss_hermite(int order) {
  require(order >= 1, "gauss_hermite: order must be >= 1");
  require(order <= 512, "gauss_hermite: order " + std::to_string(order) + " too large");
  static std::map<int, GaussHermite> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

double gaussian_average(const std::function<double(double)>& f, double mean, double sigma,
                        int order) {
  require(sigma >= 0.0, "gaussian_average: negative sigma");
  if (sigma == 0.0) return f(mean);
  const GaussHermite& rule = gauss_hermite(order);
  const double scale = std::sqrt(2.0) * sigma;
  const double norm = 1.0 / std::sqrt(units::pi);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(mean + scale * rule.nodes[i]);
  return norm * acc;
}

namespace {

double simpson_recurse(const std::function<double(double)>& f, double a, double m, double b,
                       double fa, double fm, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) {
    throw_numerical("adaptive_simpson: subdivision depth exhausted near x = " +
                    std::to_string(m));
  }
  return simpson_recurse(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
  require(std::isfinite(a) && std::isfinite(b) && a < b,
          "adaptive_simpson: interval must be finite with a < b");
  require(abs_tol > 0.0, "adaptive_simpson: abs_tol must be positive");
  require(max_depth >= 1, "adaptive_simpson: max_depth must be >= 1");
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  require(std::isfinite(fa) && std::isfinite(fm) && std::isfinite(fb),
          "adaptive_simpson: integrand returned a non-finite value");
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, a, m, b, fa, fm, fb, whole, abs_tol, max_depth);
}

double gaussian_average_adaptive(const std::function<double(double)>& f, double mean,
                                 double sigma, double rel_tol, int start_order, int max_order) {
  require(rel_tol > 0.0, "gaussian_average_adaptive: rel_tol must be positive");
  if (sigma == 0.0) return f(mean);
  double prev = gaussian_average(f, mean, sigma, start_order);
  for (int order = 2 * start_order; order <= max_order; order *= 2) {
    const double cur = gaussian_average(f, mean, sigma, order);
    const double scale = std::max({std::abs(cur), std::abs(prev), 1e-300});
    if (std::abs(cur - prev) <= rel_tol * scale) return cur;
    prev = cur;
  }
  throw_numerical("gaussian_average_adaptive: no convergence to rel_tol " +
                  std::to_string(rel_tol) + " by order " + std::to_string(max_order));
}

} // namespace icq::quad
