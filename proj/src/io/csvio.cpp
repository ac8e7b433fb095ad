#include "csvio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/units.hpp"

namespace icq::io {

namespace {

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "csv: cannot open '" + path + "' for writing");
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  require(out.good(), "csv: write to '" + path + "' failed");
}

// content lines with the comment/blank lines stripped, for header + row parsing
std::vector<std::pair<std::size_t, std::string>> content_lines(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "csv: cannot open '" + path + "'");
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    lines.emplace_back(number, line.substr(start));
  }
  return lines;
}

std::vector<double> parse_row(const std::string& path, std::size_t line_number,
                              const std::string& line, std::size_t n_columns) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    while (*end == ' ' || *end == '\t') ++end;
    require(end != field.c_str() && *end == '\0',
            "csv: bad number '" + field + "' at " + path + ":" +
                std::to_string(line_number));
    row.push_back(value);
  }
  require(row.size() == n_columns,
          "csv: expected " + std::to_string(n_columns) + " columns at " + path + ":" +
              std::to_string(line_number));
  return row;
}

void check_header(const std::string& path,
                  const std::vector<std::pair<std::size_t, std::string>>& lines,
                  const std::string& header) {
  require(!lines.empty() && lines.front().second == header,
          "csv: expected header '" + header + "' in '" + path + "'");
}

} // namespace

void write_standing_wave_csv(const std::string& path,
                             const localize::StandingWaveScan& scan) {
  std::ofstream out = open_out(path);
  out << "# standing-wave emission scan; position_ctrl in nm from a node,\n"
         "# emission in photons per probe window, stderr in the same units\n"
         "position_ctrl,emission,stderr\n";
  for (const localize::SwScanPoint& p : scan.points)
    out << fmt(p.position) << ',' << fmt(p.emission) << ',' << fmt(p.stderr_) << '\n';
  finish_out(out, path);
}

localize::StandingWaveScan read_standing_wave_csv(const std::string& path) {
  const auto lines = content_lines(path);
  check_header(path, lines, "position_ctrl,emission,stderr");
  localize::StandingWaveScan scan;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = parse_row(path, lines[i].first, lines[i].second, 3);
    scan.points.push_back({row[0], row[1], row[2]});
  }
  return scan;
}

void write_raman_csv(const std::string& path, const spectro::RamanScan& scan) {
  std::ofstream out = open_out(path);
  out << "# emission versus cavity detuning; delta_c_mhz in MHz (omega / 2 pi),\n"
         "# emission in photons per probe window, stderr in the same units\n"
         "delta_c_mhz,emission,stderr\n";
  for (const spectro::ScanSample& p : scan.points)
    out << fmt(units::rad_to_mhz(p.cavity_detuning)) << ',' << fmt(p.emission) << ','
        << fmt(p.stderr_) << '\n';
  finish_out(out, path);
}

void write_shift_csv(const std::string& path,
                     const std::vector<spectro::ShiftPoint>& points) {
  std::ofstream out = open_out(path);
  out << "# Raman-resonance shift versus probe detuning;\n"
         "# delta_p_mhz, delta_mhz and stderr in MHz (omega / 2 pi)\n"
         "delta_p_mhz,delta_mhz,stderr\n";
  for (const spectro::ShiftPoint& p : points)
    out << fmt(units::rad_to_mhz(p.probe_detuning)) << ','
        << fmt(units::rad_to_mhz(p.shift)) << ',' << fmt(units::rad_to_mhz(p.stderr_))
        << '\n';
  finish_out(out, path);
}

std::vector<spectro::ShiftPoint> read_shift_csv(const std::string& path) {
  const auto lines = content_lines(path);
  check_header(path, lines, "delta_p_mhz,delta_mhz,stderr");
  std::vector<spectro::ShiftPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = parse_row(path, lines[i].first, lines[i].second, 3);
    points.push_back({units::mhz_to_rad(row[0]), units::mhz_to_rad(row[1]),
                      units::mhz_to_rad(row[2])});
  }
  return points;
}

void write_waveform_csv(const std::string& path,
                        const std::vector<shuttle::WaveformSample>& samples) {
  std::ofstream out = open_out(path);
  out << "# shuttle electrode waveform; time_us in us, voltage_v in V\n"
         "time_us,voltage_v\n";
  for (const shuttle::WaveformSample& s : samples)
    out << fmt(s.time / units::us) << ',' << fmt(s.voltage) << '\n';
  finish_out(out, path);
}

} // namespace icq::io
