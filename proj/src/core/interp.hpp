#pragma once

#include <vector>

namespace icq::interp {

// Piecewise cubic Hermite interpolation on a strictly ascending grid.
// Slope choice is pluggable: PCHIP (Fritsch-Carlson, monotone, no overshoot)
// for tabulated physical curves, central differences for smooth model grids.
class CubicHermite {
public:
  CubicHermite() = default;

  enum class Slopes { pchip, central };
  CubicHermite(std::vector<double> x, std::vector<double> y, Slopes slopes);

  // Evaluation outside [x_front, x_back] beyond a tiny roundoff margin throws
  // validation; callers clamp when out-of-range queries are meaningful.
  double operator()(double x) const;
  double derivative(double x) const;

  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }
  bool empty() const { return x_.empty(); }

private:
  std::size_t segment(double x) const;
  std::vector<double> x_, y_, d_;
};

} // namespace icq::interp
