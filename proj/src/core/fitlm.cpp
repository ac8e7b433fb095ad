#include "fitlm.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace icq::fit {

namespace {

double fd_step(double p, double scale) {
  const double mag = (scale > 0.0) ? scale : std::max(std::abs(p), 1.0);
  return 1e-6 * mag;
}

Eigen::MatrixXd jacobian(const ResidualFn& f, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& scales, Eigen::Index n_resid) {
  const Eigen::Index np = p.size();
  Eigen::MatrixXd jac(n_resid, np);
  for (Eigen::Index j = 0; j < np; ++j) {
    const double h = fd_step(p(j), scales.size() ? scales(j) : 0.0);
    Eigen::VectorXd pp = p, pm = p;
    pp(j) += h;
    pm(j) -= h;
    jac.col(j) = (f(pp) - f(pm)) / (2.0 * h);
  }
  return jac;
}

} // namespace

LMResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0,
                             const LMOptions& opts) {
  require(p0.size() > 0, "levenberg_marquardt: empty parameter vector");
  require(p0.allFinite(), "levenberg_marquardt: non-finite starting point");
  if (opts.step_scale.size())
    require(opts.step_scale.size() == p0.size(),
            "levenberg_marquardt: step_scale length mismatch");

  Eigen::VectorXd r = residuals(p0);
  require(r.size() > 0, "levenberg_marquardt: no residuals");
  if (!r.allFinite())
    throw_numerical("levenberg_marquardt: residuals not finite at the starting point");

  LMResult out;
  out.params = p0;
  out.chi2 = r.squaredNorm();
  double lambda = opts.lambda0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd jac = jacobian(residuals, out.params, opts.step_scale, r.size());
    if (!jac.allFinite())
      throw_numerical("levenberg_marquardt: non-finite Jacobian");
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index k = 0; k < damped.rows(); ++k)
        damped(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd cand = out.params + delta;
      Eigen::VectorXd rc = cand.allFinite() ? residuals(cand) : r;
      const double chi2_cand =
          (cand.allFinite() && rc.allFinite()) ? rc.squaredNorm()
                                               : std::numeric_limits<double>::infinity();
      if (chi2_cand <= out.chi2) {
        const double dchi = out.chi2 - chi2_cand;
        double dx_rel = 0.0;
        for (Eigen::Index k = 0; k < delta.size(); ++k) {
          const double scale = (opts.step_scale.size() && opts.step_scale(k) > 0.0)
                                   ? opts.step_scale(k)
                                   : std::max(std::abs(out.params(k)), 1.0);
          dx_rel = std::max(dx_rel, std::abs(delta(k)) / scale);
        }
        out.params = cand;
        r = rc;
        out.chi2 = chi2_cand;
        lambda = std::max(lambda / 3.0, 1e-14);
        stepped = true;
        if (dchi <= opts.ftol * std::max(out.chi2, 1e-300) || dx_rel <= opts.xtol)
          out.converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e14) break;
    }
    if (out.converged || !stepped) {
      if (!stepped) out.converged = true; // nothing improves: local minimum
      break;
    }
  }

  const Eigen::MatrixXd jac = jacobian(residuals, out.params, opts.step_scale, r.size());
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
  out.covariance = cod.pseudoInverse();
  return out;
}

BrentResult minimize_scalar(const std::function<double(double)>& f, double a, double b,
                            double xtol) {
  require(b > a, "minimize_scalar: empty interval");
  require(xtol > 0.0, "minimize_scalar: xtol must be positive");
  // golden-section contraction with a parabolic-fit refinement at the end
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  BrentResult res;
  while (b - a > xtol) {
    ++res.iterations;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
    if (res.iterations > 300) break;
  }
  double xm = (f1 <= f2) ? x1 : x2;
  double fm = std::min(f1, f2);
  // one parabolic polish through (a, xm, b)
  const double fa = f(a), fb = f(b);
  const double denom = (xm - a) * (fm - fb) - (xm - b) * (fm - fa);
  if (std::abs(denom) > 1e-300) {
    const double xv = xm - 0.5 *
                               ((xm - a) * (xm - a) * (fm - fb) -
                                (xm - b) * (xm - b) * (fm - fa)) /
                               denom;
    if (xv > a && xv < b) {
      const double fv = f(xv);
      if (fv < fm) {
        xm = xv;
        fm = fv;
      }
    }
  }
  res.x = xm;
  res.value = fm;
  return res;
}

} // namespace icq::fit
