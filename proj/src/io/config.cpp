#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/units.hpp"

namespace icq::io {

namespace {

using units::mhz_to_rad;

std::vector<KeySpec> make_schema() {
  return {
      // system
      {"g0_max_mhz", "peak coupling on the strongest transition", 17.3},
      {"kappa_mhz", "cavity linewidth (FWHM = photon decay rate)", 8.2},
      {"gamma_mhz", "total P1/2 decay rate", 11.5},
      {"lambda_nm", "cavity transition wavelength", 866.0},
      {"f_secular_mhz", "axial secular frequency", 2.73},
      {"f_drive_mhz", "trap rf drive frequency", 19.55},
      {"trap_q", "Mathieu q parameter", 0.1},
      {"ion_mass_amu", "ion mass in atomic mass units", 40.0},
      {"rabi_probe_mhz", "probe-beam Rabi frequency", 11.8},
      {"rabi_cool_mhz", "cooling-beam Rabi frequency", 14.0},
      {"delta_p_mhz", "pump detuning from the S-P resonance", -10.0},
      {"delta_c_mhz", "cavity detuning from the P-D resonance", -10.0},
      {"cooling_detuning_mhz", "cooling-phase blue shift from nominal", 7.0},
      {"repump_rate_mhz", "incoherent D-to-S recycling rate", 0.0},
      {"fock_cutoff", "Fock states per polarization mode", 1LL},
      {"sigma_nm", "thermal localisation width for smeared scans", 38.5},
      {"duration_us", "probe window length", 0.3},
      {"tol", "master-equation integrator tolerance", 1.0e-8},
      // standing-wave scan
      {"sw_points", "scan positions over the standing wave", 61LL},
      {"sw_span_periods", "scan span in units of the half-wavelength period", 1.0},
      {"sw_normalise", "scale the scan maximum to 1", false},
      {"sw_fit", "fit (x_scale, y_scale, sigma, x0) to the scan", false},
      {"scan_csv", "measured standing-wave CSV to fit instead of synthesizing",
       std::string()},
      // Raman shift scans
      {"raman_points", "cavity-detuning samples per shift scan", 41LL},
      {"raman_window_mhz", "scan half-width; 0 uses three linewidths", 0.0},
      {"raman_max_recenter", "window re-centres before giving up", 6LL},
      {"raman_tol", "integrator tolerance per scan sample", 1.0e-6},
      // shift-versus-coupling map
      {"map_g0_min_mhz", "coupling grid lower edge", 14.0},
      {"map_g0_max_mhz", "coupling grid upper edge", 18.0},
      {"map_g0_points", "coupling grid size", 9LL},
      {"map_dp_min_mhz", "probe-detuning grid lower edge", -30.0},
      {"map_dp_max_mhz", "probe-detuning grid upper edge", 10.0},
      {"map_dp_points", "probe-detuning grid size", 8LL},
      {"map_refine_mhz", "row jump that triggers probe-grid refinement", 1.0},
      {"map_refine_rounds", "midpoint-insertion passes", 2LL},
      // coupling fit inputs
      {"shifts_csv", "measured shift CSV for the coupling fit", std::string()},
      {"map_json", "persisted shift map for the coupling fit", std::string()},
      // shuttle waveform
      {"shuttle_amplitude_v", "waveform plateau voltage", 2.0},
      {"shuttle_rise_us", "rise flank length", 1.0},
      {"shuttle_hold_us", "plateau length", 2.0},
      {"shuttle_fall_us", "fall flank length", 2.0},
      {"shuttle_rate_mhz", "waveform sample rate", 1000.0},
      {"alpha_nm_per_v", "displacement per volt at the ion", 108.25},
      {"leakage_freqs_mhz", "frequencies probed by the adiabaticity report",
       std::vector<double>{2.73}},
      // pulse sequence
      {"seq_kind", "cycle shape: standing-wave or coupling", std::string("standing-wave")},
      {"seq_prep_us", "preparation + reference-sample phase", 2.0},
      {"seq_cool_us", "cavity-cooling phase", 6.0},
      {"seq_shuttle_us", "transport leg of the shuttle phase", 1.0},
      {"seq_settle_us", "settle delay before the probe window", 1.7},
      {"seq_probe_us", "gated probe phase", 0.3},
      {"seq_return_us", "return transport phase", 2.0},
      {"seq_rate_mhz", "requested cycle rate; 0 skips the timing check", 0.0},
      {"seq_rate_tolerance", "fractional mismatch the timing check allows", 0.01},
      // run control
      {"seed", "random seed for synthetic-data commands", 1LL},
      {"threads", "parallel workers; 0 uses the hardware count", 0LL},
      {"out_path", "primary artifact path; empty uses the subcommand default",
       std::string()},
  };
}

const char* type_name(const ConfigValue& value) {
  switch (value.index()) {
    case 0: return "number";
    case 1: return "integer";
    case 2: return "boolean";
    case 3: return "string";
    default: return "number list";
  }
}

ConfigValue parse_json_value(const std::string& key, const ConfigValue& spec,
                             const nlohmann::json& j) {
  const std::string mismatch = "config key '" + key + "': expected a " +
                               std::string(type_name(spec));
  switch (spec.index()) {
    case 0:
      require(j.is_number(), mismatch);
      return j.get<double>();
    case 1:
      require(j.is_number_integer(), mismatch);
      return j.get<long long>();
    case 2:
      require(j.is_boolean(), mismatch);
      return j.get<bool>();
    case 3:
      require(j.is_string(), mismatch);
      return j.get<std::string>();
    default: {
      require(j.is_array(), mismatch);
      std::vector<double> out;
      for (const auto& item : j) {
        require(item.is_number(), mismatch);
        out.push_back(item.get<double>());
      }
      return out;
    }
  }
}

ConfigValue parse_override(const std::string& key, const ConfigValue& spec,
                           const std::string& text) {
  const std::string mismatch = "config key '" + key + "': cannot parse '" + text +
                               "' as a " + std::string(type_name(spec));
  const auto full_double = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end != s.c_str() && *end == '\0', mismatch);
    return v;
  };
  switch (spec.index()) {
    case 0: return full_double(text);
    case 1: {
      char* end = nullptr;
      const long long v = std::strtoll(text.c_str(), &end, 10);
      require(end != text.c_str() && *end == '\0', mismatch);
      return v;
    }
    case 2:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw_validation(mismatch);
    case 3: return text;
    default: {
      std::vector<double> out;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(full_double(item));
      require(!out.empty(), mismatch);
      return out;
    }
  }
}

std::vector<double> linspace(double lo, double hi, long long n, const char* what) {
  require(n >= 2, std::string("config: ") + what + " grid needs at least 2 points");
  require(hi > lo, std::string("config: ") + what + " grid upper edge must exceed the lower");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i)
    grid[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return grid;
}

} // namespace

const std::vector<KeySpec>& Config::schema() {
  static const std::vector<KeySpec> table = make_schema();
  return table;
}

Config::Config() {
  for (const KeySpec& spec : schema()) values_.emplace(spec.name, spec.fallback);
}

Config Config::from_file(const std::string& path) {
  Config config;
  config.apply_file(path);
  return config;
}

void Config::apply_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_text(buffer.str());
}

Config Config::from_text(const std::string& json_text) {
  Config config;
  config.apply_text(json_text);
  return config;
}

void Config::apply_text(const std::string& json_text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& err) {
    throw_validation(std::string("config: ") + err.what());
  }
  require(parsed.is_object(), "config: top level must be a JSON object");
  for (const auto& [key, value] : parsed.items()) {
    const auto slot = values_.find(key);
    require(slot != values_.end(), "config: unknown key '" + key + "'");
    slot->second = parse_json_value(key, slot->second, value);
  }
}

void Config::set(const std::string& key, const std::string& value) {
  const auto slot = values_.find(key);
  require(slot != values_.end(), "config: unknown key '" + key + "'");
  slot->second = parse_override(key, slot->second, value);
}

const ConfigValue& Config::stored(const std::string& key) const {
  const auto slot = values_.find(key);
  require(slot != values_.end(), "config: unknown key '" + key + "'");
  return slot->second;
}

double Config::number(const std::string& key) const {
  const ConfigValue& value = stored(key);
  if (const double* v = std::get_if<double>(&value)) return *v;
  if (const long long* v = std::get_if<long long>(&value))
    return static_cast<double>(*v);
  throw_validation("config key '" + key + "' is a " + type_name(value) +
                   ", not a number");
}

long long Config::integer(const std::string& key) const {
  const ConfigValue& value = stored(key);
  const long long* v = std::get_if<long long>(&value);
  require(v != nullptr,
          "config key '" + key + "' is a " + type_name(value) + ", not an integer");
  return *v;
}

bool Config::flag(const std::string& key) const {
  const ConfigValue& value = stored(key);
  const bool* v = std::get_if<bool>(&value);
  require(v != nullptr,
          "config key '" + key + "' is a " + type_name(value) + ", not a boolean");
  return *v;
}

const std::string& Config::text(const std::string& key) const {
  const ConfigValue& value = stored(key);
  const std::string* v = std::get_if<std::string>(&value);
  require(v != nullptr,
          "config key '" + key + "' is a " + type_name(value) + ", not a string");
  return *v;
}

const std::vector<double>& Config::numbers(const std::string& key) const {
  const ConfigValue& value = stored(key);
  const std::vector<double>* v = std::get_if<std::vector<double>>(&value);
  require(v != nullptr, "config key '" + key + "' is a " + type_name(value) +
                            ", not a number list");
  return *v;
}

const std::string& Config::required_path(const std::string& key) const {
  const std::string& value = text(key);
  require(!value.empty(), "config: missing required key '" + key + "'");
  return value;
}

std::string Config::to_json() const {
  nlohmann::ordered_json out;
  for (const KeySpec& spec : schema()) {
    const ConfigValue& value = stored(spec.name);
    switch (value.index()) {
      case 0: out[spec.name] = std::get<double>(value); break;
      case 1: out[spec.name] = std::get<long long>(value); break;
      case 2: out[spec.name] = std::get<bool>(value); break;
      case 3: out[spec.name] = std::get<std::string>(value); break;
      default: out[spec.name] = std::get<std::vector<double>>(value); break;
    }
  }
  return out.dump(2) + "\n";
}

model::SystemParams Config::system_params() const {
  model::SystemParams p = model::SystemParams::defaults();
  p.ion.gamma = mhz_to_rad(number("gamma_mhz"));
  p.cavity.g0 = mhz_to_rad(number("g0_max_mhz"));
  p.cavity.kappa = mhz_to_rad(number("kappa_mhz"));
  p.cavity.detuning = mhz_to_rad(number("delta_c_mhz"));
  p.cavity.wavelength = number("lambda_nm") * units::nm;
  p.cavity.n_max = static_cast<int>(integer("fock_cutoff"));
  p.trap.omega_axial = mhz_to_rad(number("f_secular_mhz"));
  p.trap.omega_rf = mhz_to_rad(number("f_drive_mhz"));
  p.trap.q_param = number("trap_q");
  p.trap.mass = number("ion_mass_amu") * units::atomic_mass_kg;
  p.lasers = {model::LaserField::pi_polarized(mhz_to_rad(number("rabi_probe_mhz")),
                                              mhz_to_rad(number("delta_p_mhz")))};
  p.repump_rate = mhz_to_rad(number("repump_rate_mhz"));
  return p;
}

localize::PositionDistribution Config::probe_distribution() const {
  localize::PositionDistribution dist;
  dist.sigma_thermal = number("sigma_nm") * units::nm;
  return dist;
}

sequence::SequenceConfig Config::sequence_config() const {
  sequence::SequenceConfig seq;
  seq.prep_duration = number("seq_prep_us") * units::us;
  seq.cool_duration = number("seq_cool_us") * units::us;
  seq.shuttle_duration = number("seq_shuttle_us") * units::us;
  seq.settle_duration = number("seq_settle_us") * units::us;
  seq.probe_duration = number("seq_probe_us") * units::us;
  seq.return_duration = number("seq_return_us") * units::us;
  seq.cavity_detuning = mhz_to_rad(number("delta_c_mhz"));
  seq.cooling_offset = mhz_to_rad(number("cooling_detuning_mhz"));
  seq.repetition_rate = number("seq_rate_mhz") * 1.0e6;
  seq.rate_tolerance = number("seq_rate_tolerance");
  return seq;
}

shuttle::ShuttlePulse Config::shuttle_pulse() const {
  shuttle::ShuttlePulse pulse;
  pulse.amplitude = number("shuttle_amplitude_v");
  pulse.rise_time = number("shuttle_rise_us") * units::us;
  pulse.hold_time = number("shuttle_hold_us") * units::us;
  pulse.fall_time = number("shuttle_fall_us") * units::us;
  pulse.sample_rate = number("shuttle_rate_mhz") * 1.0e6;
  return pulse;
}

shuttle::Calibration Config::shuttle_calibration() const {
  shuttle::Calibration cal;
  cal.alpha = number("alpha_nm_per_v") * units::nm;
  return cal;
}

spectro::ShiftOptions Config::shift_options() const {
  spectro::ShiftOptions opts;
  opts.scan_points = static_cast<int>(integer("raman_points"));
  opts.window_halfwidth = mhz_to_rad(number("raman_window_mhz"));
  opts.max_recenter = static_cast<int>(integer("raman_max_recenter"));
  opts.tol = number("raman_tol");
  opts.duration = number("duration_us") * units::us;
  return opts;
}

spectro::MapOptions Config::map_options() const {
  spectro::MapOptions opts;
  opts.shift = shift_options();
  opts.refine_threshold = mhz_to_rad(number("map_refine_mhz"));
  opts.refine_rounds = static_cast<int>(integer("map_refine_rounds"));
  opts.threads = static_cast<int>(integer("threads"));
  return opts;
}

std::vector<double> Config::map_g0_grid() const {
  std::vector<double> grid = linspace(number("map_g0_min_mhz"), number("map_g0_max_mhz"),
                                      integer("map_g0_points"), "coupling");
  for (double& v : grid) v = mhz_to_rad(v);
  return grid;
}

std::vector<double> Config::map_probe_grid() const {
  std::vector<double> grid = linspace(number("map_dp_min_mhz"), number("map_dp_max_mhz"),
                                      integer("map_dp_points"), "probe-detuning");
  for (double& v : grid) v = mhz_to_rad(v);
  return grid;
}

} // namespace icq::io
