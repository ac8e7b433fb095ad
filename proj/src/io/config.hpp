#pragma once
// Flat, schema-checked JSON configuration for the command-line tools and
// shared-library sessions. Every key is known in advance with a type and a
// default taken from the measured system; unknown keys, type mismatches and
// unparseable overrides are rejected by name.
//
// Unit conventions across all keys and emitted files: frequencies in MHz
// (omega / 2 pi), positions in nm, times in us, voltages in V.

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "core/localize.hpp"
#include "core/model.hpp"
#include "core/sequence.hpp"
#include "core/shuttle.hpp"
#include "core/spectro.hpp"

namespace icq::io {

using ConfigValue =
    std::variant<double, long long, bool, std::string, std::vector<double>>;

struct KeySpec {
  const char* name;
  const char* note; // one-line description, surfaced by the CLI help
  ConfigValue fallback;
};

class Config {
public:
  Config(); // schema defaults

  static Config from_file(const std::string& path);
  static Config from_text(const std::string& json_text);

  // merge a JSON object over the current values
  void apply_text(const std::string& json_text);
  void apply_file(const std::string& path);
  // apply one "--set" override; the value string is parsed per the key's type
  void set(const std::string& key, const std::string& value);

  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& numbers(const std::string& key) const;

  // text value that must be non-empty; the error names the missing key
  const std::string& required_path(const std::string& key) const;

  // full dump in schema order
  std::string to_json() const;

  // assembled domain objects
  model::SystemParams system_params() const;
  localize::PositionDistribution probe_distribution() const; // width sigma_nm
  sequence::SequenceConfig sequence_config() const;
  shuttle::ShuttlePulse shuttle_pulse() const;
  shuttle::Calibration shuttle_calibration() const;
  spectro::ShiftOptions shift_options() const;
  spectro::MapOptions map_options() const;
  std::vector<double> map_g0_grid() const;    // rad/s, ascending
  std::vector<double> map_probe_grid() const; // rad/s, ascending

  static const std::vector<KeySpec>& schema();

private:
  const ConfigValue& stored(const std::string& key) const;
  std::map<std::string, ConfigValue> values_;
};

} // namespace icq::io
