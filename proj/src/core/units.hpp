#pragma once

// Unit conventions: angular frequencies in rad/s, lengths in m, times in s
// everywhere inside the core.  External interfaces (config files, CSV/JSON,
// C API) use MHz (= omega / 2 pi / 1e6), nm and us; conversion happens at
// those boundaries and nowhere else.

namespace icq::units {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double k_boltzmann = 1.380649e-23;     // J/K (exact, SI)
inline constexpr double atomic_mass_kg = 1.66053906660e-27;

inline constexpr double nm = 1e-9;
inline constexpr double us = 1e-6;

// frequency given as f/2pi in MHz -> angular frequency in rad/s
inline constexpr double mhz_to_rad(double f_mhz) { return two_pi * 1e6 * f_mhz; }
inline constexpr double rad_to_mhz(double w) { return w / (two_pi * 1e6); }

} // namespace icq::units
