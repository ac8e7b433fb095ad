#pragma once

#include <functional>
#include <vector>

namespace icq::quad {

struct GaussHermite {
  std::vector<double> nodes;   // roots of H_n, ascending
  std::vector<double> weights; // sum to sqrt(pi)
};

// Golub-Welsch rule for weight e^{-t^2}; cached per order.
const GaussHermite& gauss_hermite(int order);

// E[f(X)] with X ~ N(mean, sigma^2); sigma = 0 collapses to f(mean).
double gaussian_average(const std::function<double(double)>& f, double mean, double sigma,
                        int order);

// Doubles the order until the relative change drops below rel_tol.  Throws
// numerical naming the last order if the cap is hit without settling.
// Converges fast only for smooth integrands; interpolated curves with
// derivative kinks belong in adaptive_simpson instead.
double gaussian_average_adaptive(const std::function<double(double)>& f, double mean,
                                 double sigma, double rel_tol = 1e-6, int start_order = 21,
                                 int max_order = 336);

// Recursive Simpson quadrature on [a, b] to an absolute error target.
// Subdivision concentrates around corners and interpolation knots, so
// piecewise-smooth integrands converge where Gauss rules stall.  Throws
// numerical if max_depth halvings cannot reach abs_tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 40);

} // namespace icq::quad
