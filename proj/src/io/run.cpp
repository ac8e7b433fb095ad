#include "run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/qdyn.hpp"
#include "core/units.hpp"
#include "csvio.hpp"
#include "svg.hpp"

namespace icq::io {

namespace {

using nlohmann::ordered_json;
using units::mhz_to_rad;
using units::rad_to_mhz;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  require(out.good(), "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  require(out.good(), "write to '" + path + "' failed");
}

ordered_json path_or_null(const std::string& path) {
  if (path.empty()) return nullptr;
  return path;
}

} // namespace

std::string run_standing_wave(const Config& config, const std::string& csv_path,
                              const std::string& svg_path) {
  const model::SystemParams params = config.system_params();

  localize::StandingWaveScan scan; // positions in nm (= control units)
  const std::string& scan_csv = config.text("scan_csv");
  if (!scan_csv.empty()) {
    scan = read_standing_wave_csv(scan_csv);
  } else {
    const long long n = config.integer("sw_points");
    require(n >= 2, "config: sw_points must be at least 2");
    const double span =
        config.number("sw_span_periods") * 0.5 * params.cavity.wavelength;
    require(span > 0.0, "config: sw_span_periods must be positive");
    std::vector<double> positions(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i)
      positions[static_cast<std::size_t>(i)] =
          span * static_cast<double>(i) / static_cast<double>(n - 1);
    localize::ScanOptions options;
    options.normalise = config.flag("sw_normalise");
    options.tol = config.number("tol");
    options.duration = config.number("duration_us") * units::us;
    scan = localize::standing_wave_scan(positions, params,
                                        config.probe_distribution(), options);
    for (localize::SwScanPoint& p : scan.points) p.position /= units::nm;
  }

  if (!csv_path.empty()) write_standing_wave_csv(csv_path, scan);
  if (!svg_path.empty()) {
    Plot plot;
    plot.title = "Standing-wave emission scan";
    plot.x_label = "position (nm)";
    plot.y_label = scan.normalised ? "emission (normalised)"
                                   : "emission (photons per window)";
    PlotSeries series;
    series.label = "scan";
    for (const localize::SwScanPoint& p : scan.points) {
      series.x.push_back(p.position);
      series.y.push_back(p.emission);
    }
    plot.series.push_back(std::move(series));
    write_svg(svg_path, plot);
  }

  ordered_json summary;
  summary["command"] = "standing-wave";
  summary["points"] = scan.points.size();
  summary["sigma_nm"] = config.number("sigma_nm");
  summary["visibility"] = localize::visibility(scan);
  if (config.flag("sw_fit")) {
    localize::SwFitOptions options;
    options.curve_tol = config.number("tol");
    options.duration = config.number("duration_us") * units::us;
    const localize::StandingWaveFit fit =
        localize::fit_standing_wave(scan, params, options);
    ordered_json fit_json;
    fit_json["x_scale_nm_per_ctrl"] = fit.x_scale / units::nm;
    fit_json["y_scale"] = fit.y_scale;
    fit_json["sigma_nm"] = fit.sigma / units::nm;
    fit_json["x0_nm"] = fit.x0 / units::nm;
    fit_json["residual"] = fit.residual;
    summary["fit"] = std::move(fit_json);
  } else {
    summary["fit"] = nullptr;
  }
  summary["csv"] = path_or_null(csv_path);
  summary["svg"] = path_or_null(svg_path);
  return summary.dump(2) + "\n";
}

std::string run_raman_scan(const Config& config, const std::string& csv_path,
                           const std::string& svg_path) {
  const model::SystemParams params = config.system_params();
  const double probe_detuning = mhz_to_rad(config.number("delta_p_mhz"));
  const spectro::ShiftMeasurement measurement =
      spectro::measure_shift(probe_detuning, params, config.shift_options());

  if (!csv_path.empty()) write_raman_csv(csv_path, measurement.scan);
  if (!svg_path.empty()) {
    Plot plot;
    plot.title = "Raman resonance scan";
    plot.x_label = "cavity detuning (MHz)";
    plot.y_label = "emission (photons per window)";
    PlotSeries data;
    data.label = "scan";
    data.markers = true;
    for (const spectro::ScanSample& p : measurement.scan.points) {
      data.x.push_back(rad_to_mhz(p.cavity_detuning));
      data.y.push_back(p.emission);
    }
    PlotSeries overlay;
    overlay.label = "Lorentzian fit";
    const double lo = data.x.front(), hi = data.x.back();
    const spectro::LorentzianFitResult& fit = measurement.fit;
    for (int i = 0; i < 200; ++i) {
      const double x = lo + (hi - lo) * i / 199.0;
      const double u = 2.0 * (mhz_to_rad(x) - fit.center) / fit.fwhm;
      overlay.x.push_back(x);
      overlay.y.push_back(fit.offset + fit.amplitude / (1.0 + u * u));
    }
    plot.series.push_back(std::move(overlay));
    plot.series.push_back(std::move(data));
    write_svg(svg_path, plot);
  }

  ordered_json summary;
  summary["command"] = "raman-scan";
  summary["probe_detuning_mhz"] = rad_to_mhz(probe_detuning);
  summary["center_mhz"] = rad_to_mhz(measurement.fit.center);
  summary["fwhm_mhz"] = rad_to_mhz(measurement.fit.fwhm);
  summary["shift_mhz"] = rad_to_mhz(measurement.point.shift);
  summary["shift_stderr_mhz"] = rad_to_mhz(measurement.point.stderr_);
  summary["points"] = measurement.scan.points.size();
  summary["csv"] = path_or_null(csv_path);
  summary["svg"] = path_or_null(svg_path);
  return summary.dump(2) + "\n";
}

std::string run_delta_map(const Config& config, const std::string& json_path) {
  const model::SystemParams params = config.system_params();
  const spectro::DeltaMap map = spectro::build_delta_map(
      config.map_g0_grid(), config.map_probe_grid(), params, config.map_options());
  if (!json_path.empty()) write_text(json_path, map.to_json().dump(2) + "\n");

  ordered_json summary;
  summary["command"] = "delta-map";
  summary["g0_points"] = map.g0_grid.size();
  summary["probe_points"] = map.probe_grid.size();
  summary["refine_rounds_used"] = map.refine_rounds_used;
  summary["max_adjacent_jump_mhz"] = rad_to_mhz(map.max_adjacent_jump);
  summary["json"] = path_or_null(json_path);
  return summary.dump(2) + "\n";
}

std::string run_fit_g0(const Config& config, const std::string& report_path) {
  const std::string& shifts_csv = config.required_path("shifts_csv");
  const std::string& map_json = config.required_path("map_json");

  const std::vector<spectro::ShiftPoint> points = read_shift_csv(shifts_csv);
  std::ifstream in(map_json);
  require(in.good(), "fit-g0: cannot open map '" + map_json + "'");
  nlohmann::json map_doc;
  try {
    map_doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw_validation("fit-g0: map '" + map_json + "': " + err.what());
  }
  const spectro::DeltaMap map = spectro::DeltaMap::from_json(map_doc);
  const spectro::G0Fit fit = spectro::fit_g0(points, map);

  ordered_json report;
  report["command"] = "fit-g0";
  report["g0_mhz"] = rad_to_mhz(fit.g0);
  report["g0_stderr_mhz"] = rad_to_mhz(fit.stderr_);
  report["chi2"] = fit.chi2;
  report["points"] = points.size();
  report["shifts_csv"] = shifts_csv;
  report["map_json"] = map_json;
  const std::string text = report.dump(2) + "\n";
  if (!report_path.empty()) write_text(report_path, text);
  return text;
}

std::string run_waveform(const Config& config, const std::string& csv_path,
                         const std::string& report_path) {
  const shuttle::ShuttlePulse pulse = config.shuttle_pulse();
  const shuttle::Calibration calibration = config.shuttle_calibration();
  const std::vector<shuttle::WaveformSample> samples =
      shuttle::generate_waveform(pulse);
  if (!csv_path.empty()) write_waveform_csv(csv_path, samples);

  const std::vector<double>& freqs = config.numbers("leakage_freqs_mhz");
  require(!freqs.empty(), "config: leakage_freqs_mhz must list at least one frequency");
  ordered_json leaks = ordered_json::array();
  for (double f_mhz : freqs) {
    const double leak = shuttle::spectral_leakage(samples, mhz_to_rad(f_mhz));
    ordered_json entry;
    entry["frequency_mhz"] = f_mhz;
    entry["leakage"] = leak;
    // a rectangular step leaks exactly 1 under the same normalisation
    require(leak > 0.0, "waveform: spectral leakage vanished; step ratio undefined");
    entry["step_ratio"] = 1.0 / leak;
    leaks.push_back(std::move(entry));
  }

  ordered_json report;
  report["command"] = "waveform";
  report["samples"] = samples.size();
  report["duration_us"] = samples.back().time / units::us;
  report["amplitude_v"] = pulse.amplitude;
  report["peak_displacement_nm"] =
      shuttle::displacement(pulse.amplitude, calibration) / units::nm;
  report["adiabaticity"] = std::move(leaks);
  report["csv"] = path_or_null(csv_path);
  const std::string text = report.dump(2) + "\n";
  if (!report_path.empty()) write_text(report_path, text);
  return text;
}

std::string run_sequence(const Config& config, bool check_rate,
                         const std::string& json_path) {
  sequence::SequenceConfig seq_config = config.sequence_config();
  // --check without an explicit rate verifies against the published cycle rate;
  // an explicitly configured rate is enforced by the builders either way.
  if (check_rate && seq_config.repetition_rate <= 0.0)
    seq_config.repetition_rate = 91.0e3;

  const std::string& kind = config.text("seq_kind");
  sequence::PulseSequence seq;
  if (kind == "standing-wave") {
    seq = sequence::standing_wave_sequence(seq_config);
  } else if (kind == "coupling") {
    seq = sequence::coupling_measurement_sequence(seq_config);
  } else {
    throw_validation("config key 'seq_kind': expected 'standing-wave' or "
                     "'coupling', got '" +
                     kind + "'");
  }

  const std::string table = sequence::to_json(seq);
  if (!json_path.empty()) write_text(json_path, table);

  ordered_json summary;
  summary["command"] = "sequence";
  summary["kind"] = kind;
  summary["phases"] = seq.phases.size();
  summary["gates"] = seq.gate_count();
  summary["total_us"] = seq.total_duration() / units::us;
  summary["rate_khz"] = seq.repetition_rate() / 1.0e3;
  if (seq_config.repetition_rate > 0.0) {
    char note[96];
    std::snprintf(note, sizeof note, "passed against %.4g kHz (tolerance %.3g%%)",
                  seq_config.repetition_rate / 1.0e3,
                  100.0 * seq_config.rate_tolerance);
    summary["rate_check"] = note;
  } else {
    summary["rate_check"] = "skipped";
  }
  summary["json"] = path_or_null(json_path);
  return summary.dump(2) + "\n";
}

std::string run_selftest(const Config& config) {
  ordered_json checks = ordered_json::array();
  const auto run_check = [&checks](const char* name, const auto& body) {
    try {
      body();
    } catch (const Error& err) {
      throw Error(err.kind(),
                  std::string("selftest '") + name + "' failed: " + err.what());
    }
    checks.push_back(name);
  };

  run_check("window-shape", [] {
    const double peak = shuttle::bnw(0.5, 1.0);
    require(std::abs(peak - 1.0) < 1.0e-9, "window peak is not 1");
    require(std::abs(shuttle::bnw(0.0, 1.0) - 3.628e-4) < 1.0e-9,
            "window edge is off");
  });

  const model::SystemParams params = config.system_params();

  run_check("thermal-width-round-trip", [&params] {
    const double temperature = 2.1e-3;
    const double width =
        localize::spread(localize::thermal_sigma(temperature, params.trap));
    const double back = localize::temperature_from_spread(width, params.trap);
    require(std::abs(back - temperature) < 1.0e-12 * temperature,
            "spread/temperature round trip drifted");
  });

  run_check("effective-coupling-monotone", [&params] {
    const double k = params.cavity.wavenumber();
    double previous = params.cavity.g0;
    for (double sigma = 10.0e-9; sigma <= 100.0e-9; sigma += 10.0e-9) {
      const double g = localize::effective_coupling(params.cavity.g0, sigma, k);
      require(g > 0.0 && g <= params.cavity.g0, "effective coupling out of range");
      require(g < previous, "effective coupling is not decreasing");
      previous = g;
    }
  });

  run_check("sequence-rate-arithmetic", [] {
    const sequence::PulseSequence seq = sequence::standing_wave_sequence();
    require(std::abs(seq.repetition_rate() * seq.total_duration() - 1.0) < 1.0e-12,
            "repetition rate is not the reciprocal of the total");
  });

  run_check("empty-cavity-halfwidth", [&params] {
    const double kappa = params.cavity.kappa;
    const auto scan = model::empty_cavity_scan({-0.5 * kappa, 0.0, 0.5 * kappa}, kappa);
    require(std::abs(scan[1].value - 1.0) < 1.0e-12, "peak transmission is not 1");
    require(std::abs(scan[0].value - 0.5) < 1.0e-12 &&
                std::abs(scan[2].value - 0.5) < 1.0e-12,
            "half transmission is not at half the linewidth");
  });

  run_check("two-level-decay", [] {
    const qdyn::HilbertSpace space = qdyn::HilbertSpace::make({2});
    const double gamma = 1.0e6;
    qdyn::Matrix h = qdyn::Matrix::Zero(2, 2);
    qdyn::Matrix lower = qdyn::Matrix::Zero(2, 2);
    lower(0, 1) = 1.0;
    const qdyn::MasterEquation me({space, h}, {{{space, lower}, gamma}});
    qdyn::Vector excited(2);
    excited << 0.0, 1.0;
    const double t = 1.5 / gamma;
    const qdyn::DensityMatrix rho =
        qdyn::evolve_final(qdyn::DensityMatrix::pure(space, excited), me, t);
    qdyn::validate_density(rho);
    require(std::abs(rho.mat(1, 1).real() - std::exp(-gamma * t)) < 1.0e-6,
            "two-level decay misses the analytic law");
  });

  run_check("random-lindblad-trace", [&config] {
    const qdyn::HilbertSpace space = qdyn::HilbertSpace::make({3});
    std::mt19937_64 rng(static_cast<unsigned long long>(config.integer("seed")));
    std::normal_distribution<double> gauss;
    qdyn::Matrix h(3, 3), l(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        h(i, j) = qdyn::Complex(gauss(rng), gauss(rng));
        l(i, j) = qdyn::Complex(gauss(rng), gauss(rng));
      }
    h = ((h + h.adjoint()) / 2.0).eval();
    const qdyn::MasterEquation me({space, h}, {{{space, l}, 0.7}});
    qdyn::Vector ket(3);
    ket << 1.0, 0.0, 0.0;
    const qdyn::DensityMatrix rho =
        qdyn::evolve_final(qdyn::DensityMatrix::pure(space, ket), me, 2.0);
    qdyn::validate_density(rho);
  });

  run_check("csv-round-trip", [] {
    namespace fs = std::filesystem;
    const unsigned token = std::random_device{}();
    const fs::path path =
        fs::temp_directory_path() / ("icq_selftest_" + std::to_string(token) + ".csv");
    localize::StandingWaveScan scan;
    scan.points = {{0.0, 0.123456789, 0.01}, {216.5, 0.5, 0.01}, {433.0, 0.25, 0.01}};
    write_standing_wave_csv(path.string(), scan);
    const localize::StandingWaveScan back = read_standing_wave_csv(path.string());
    fs::remove(path);
    require(back.points.size() == scan.points.size(), "csv row count changed");
    for (std::size_t i = 0; i < scan.points.size(); ++i)
      require(std::abs(back.points[i].emission - scan.points[i].emission) <=
                  1.0e-9 * std::abs(scan.points[i].emission),
              "csv values drifted");
  });

  run_check("config-dump-round-trip", [&config] {
    const std::string dumped = config.to_json();
    require(Config::from_text(dumped).to_json() == dumped,
            "config dump does not round-trip");
  });

  ordered_json summary;
  summary["command"] = "selftest";
  summary["checks"] = std::move(checks);
  summary["passed"] = summary["checks"].size();
  return summary.dump(2) + "\n";
}

} // namespace icq::io
