#pragma once
// Subcommand implementations shared by the shared-library C API and the
// command-line tool. Each runner pulls its inputs from the configuration,
// writes the requested artifacts (empty path = skip that artifact), and
// returns a JSON summary of what it produced. Validation failures and solver
// failures surface as the library's two error kinds.

#include <string>

#include "config.hpp"

namespace icq::io {

// emission scan over the standing wave (or a re-fit of scan_csv) + optional
// localisation fit
std::string run_standing_wave(const Config& config, const std::string& csv_path,
                              const std::string& svg_path);

// shift measurement at the configured probe detuning, with Lorentzian overlay
std::string run_raman_scan(const Config& config, const std::string& csv_path,
                           const std::string& svg_path);

// build and persist the shift-versus-coupling map
std::string run_delta_map(const Config& config, const std::string& json_path);

// one-parameter coupling fit of shifts_csv against map_json
std::string run_fit_g0(const Config& config, const std::string& report_path);

// shuttle waveform samples + adiabaticity report over leakage_freqs_mhz
std::string run_waveform(const Config& config, const std::string& csv_path,
                         const std::string& report_path);

// phase table for the configured cycle; check_rate enforces the requested
// repetition rate (defaulting to the published 91 kHz when unset)
std::string run_sequence(const Config& config, bool check_rate,
                         const std::string& json_path);

// quick invariant sweep across the library; throws on the first failure
std::string run_selftest(const Config& config);

} // namespace icq::io
