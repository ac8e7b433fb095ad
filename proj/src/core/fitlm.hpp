#pragma once

#include <functional>

#include <Eigen/Dense>

namespace icq::fit {

// Residual vector for parameter vector p; entries are already weighted
// (model - data) / sigma so chi2 = |r|^2.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LMOptions {
  int max_iterations = 200;
  double ftol = 1e-12;        // relative chi2 change for convergence
  double xtol = 1e-12;        // relative step size for convergence
  double lambda0 = 1e-3;      // initial damping
  // Typical magnitude per parameter for finite-difference steps; <= 0 entries
  // (or an empty vector) fall back to max(|p_j|, 1).
  Eigen::VectorXd step_scale;
};

struct LMResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance; // (J^T J)^{-1} at the solution
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt) with a central-difference
// Jacobian.  Throws validation for malformed input, numerical if the model
// keeps returning non-finite residuals at the starting point.
LMResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0,
                             const LMOptions& opts = {});

// Scalar minimisation by golden-section with parabolic refinement on [a, b].
struct BrentResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};
BrentResult minimize_scalar(const std::function<double(double)>& f, double a, double b,
                            double xtol);

} // namespace icq::fit
