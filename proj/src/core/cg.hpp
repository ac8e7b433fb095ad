#pragma once

// Clebsch-Gordan coefficients <j1 m1; j2 m2 | j3 m3> in the Condon-Shortley
// phase convention.  Angular momenta are passed doubled (two_j = 2j) so
// half-integer arguments stay exact integers.

namespace icq::cg {

// Returns 0 for violated selection rules (triangle, m3 != m1 + m2).
// Throws validation for arguments that are not valid quantum numbers
// (negative j, |m| > j, mismatched integer/half-integer parity, j too large).
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_j3, int two_m3);

// Convenience overload on plain (half-)integer values such as 0.5, -1.5.
double clebsch_gordan(double j1, double m1, double j2, double m2, double j3, double m3);

} // namespace icq::cg
