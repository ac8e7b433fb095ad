#include "interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace icq::interp {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Fritsch-Carlson boundary slope with the usual monotonicity clamps.
double pchip_edge(double h0, double h1, double d0, double d1) {
  double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(d) != sign(d0))
    d = 0.0;
  else if (sign(d0) != sign(d1) && std::abs(d) > 3.0 * std::abs(d0))
    d = 3.0 * d0;
  return d;
}

} // namespace

CubicHermite::CubicHermite(std::vector<double> x, std::vector<double> y, Slopes slopes)
    : x_(std::move(x)), y_(std::move(y)) {
  require(x_.size() == y_.size(), "interpolation: x and y lengths differ");
  require(x_.size() >= 2, "interpolation: need at least two points");
  for (std::size_t i = 1; i < x_.size(); ++i)
    require(x_[i] > x_[i - 1], "interpolation: grid must be strictly ascending");

  const std::size_t n = x_.size();
  d_.assign(n, 0.0);
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }

  if (n == 2) {
    d_[0] = d_[1] = delta[0];
    return;
  }

  if (slopes == Slopes::pchip) {
    d_[0] = pchip_edge(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = pchip_edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  } else {
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
      d_[i] = (y_[i + 1] - y_[i - 1]) / (x_[i + 1] - x_[i - 1]);
  }
}

std::size_t CubicHermite::segment(double x) const {
  const double span = x_.back() - x_.front();
  // build the message only on failure: this runs once per interpolant query
  if (!(x >= x_.front() - 1e-9 * span && x <= x_.back() + 1e-9 * span)) {
    throw_validation("interpolation: query " + std::to_string(x) + " outside grid [" +
                     std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
  }
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
  if (i > 0) --i;
  if (i + 1 >= x_.size()) i = x_.size() - 2;
  return i;
}

double CubicHermite::operator()(double x) const {
  require(!x_.empty(), "interpolation: empty interpolant");
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = std::clamp((x - x_[i]) / h, 0.0, 1.0);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double CubicHermite::derivative(double x) const {
  require(!x_.empty(), "interpolation: empty interpolant");
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = std::clamp((x - x_[i]) / h, 0.0, 1.0);
  const double t2 = t * t;
  const double g00 = (6 * t2 - 6 * t) / h;
  const double g10 = 3 * t2 - 4 * t + 1;
  const double g01 = (-6 * t2 + 6 * t) / h;
  const double g11 = 3 * t2 - 2 * t;
  return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

} // namespace icq::interp
