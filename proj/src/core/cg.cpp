#include "cg.hpp"

#include <array>
#include <cmath>
#include <string>

#include "error.hpp"

namespace icq::cg {

namespace {

constexpr int kMaxFact = 170;

const std::array<double, kMaxFact + 1>& factorials() {
  static const auto table = [] {
    std::array<double, kMaxFact + 1> f{};
    f[0] = 1.0;
    for (int i = 1; i <= kMaxFact; ++i) f[i] = f[i - 1] * i;
    return f;
  }();
  return table;
}

double fact(int n) { return factorials()[static_cast<std::size_t>(n)]; }

void check_pair(int two_j, int two_m, const char* which) {
  require(two_j >= 0, std::string("clebsch_gordan: negative j for ") + which);
  require(two_j <= 120, std::string("clebsch_gordan: j too large for ") + which);
  require(std::abs(two_m) <= two_j, std::string("clebsch_gordan: |m| > j for ") + which);
  require(((two_j + two_m) & 1) == 0,
          std::string("clebsch_gordan: m and j differ by a non-integer for ") + which);
}

} // namespace

double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_j3, int two_m3) {
  check_pair(two_j1, two_m1, "(j1, m1)");
  check_pair(two_j2, two_m2, "(j2, m2)");
  check_pair(two_j3, two_m3, "(j3, m3)");

  if (two_m1 + two_m2 != two_m3) return 0.0;
  if ((two_j1 + two_j2 + two_j3) & 1) return 0.0;
  const int jjj1 = (two_j1 + two_j2 - two_j3) / 2;
  const int jjj2 = (two_j1 - two_j2 + two_j3) / 2;
  const int jjj3 = (-two_j1 + two_j2 + two_j3) / 2;
  if (jjj1 < 0 || jjj2 < 0 || jjj3 < 0) return 0.0;

  const int j1m1 = (two_j1 - two_m1) / 2, j1p1 = (two_j1 + two_m1) / 2;
  const int j2m2 = (two_j2 - two_m2) / 2, j2p2 = (two_j2 + two_m2) / 2;
  const int j3m3 = (two_j3 - two_m3) / 2, j3p3 = (two_j3 + two_m3) / 2;
  const int jsum1 = (two_j1 + two_j2 + two_j3) / 2 + 1;

  // Racah's closed form
  const double delta = fact(jjj1) * fact(jjj2) * fact(jjj3) / fact(jsum1);
  const double pref = std::sqrt((two_j3 + 1.0) * delta * fact(j1p1) * fact(j1m1) * fact(j2p2) *
                                fact(j2m2) * fact(j3p3) * fact(j3m3));

  const int t1 = (two_j3 - two_j2 + two_m1) / 2; // j3 - j2 + m1
  const int t2 = (two_j3 - two_j1 - two_m2) / 2; // j3 - j1 - m2
  const int kmin = std::max({0, -t1, -t2});
  const int kmax = std::min({jjj1, j1m1, j2p2});

  double sum = 0.0;
  for (int k = kmin; k <= kmax; ++k) {
    const double denom = fact(k) * fact(jjj1 - k) * fact(j1m1 - k) * fact(j2p2 - k) *
                         fact(t1 + k) * fact(t2 + k);
    sum += ((k & 1) ? -1.0 : 1.0) / denom;
  }
  return pref * sum;
}

double clebsch_gordan(double j1, double m1, double j2, double m2, double j3, double m3) {
  auto doubled = [](double x, const char* which) {
    const double two = 2.0 * x;
    const double rounded = std::round(two);
    require(std::abs(two - rounded) < 1e-9,
            std::string("clebsch_gordan: ") + which + " is not integer or half-integer");
    return static_cast<int>(rounded);
  };
  return clebsch_gordan(doubled(j1, "j1"), doubled(m1, "m1"), doubled(j2, "j2"),
                        doubled(m2, "m2"), doubled(j3, "j3"), doubled(m3, "m3"));
}

} // namespace icq::cg
