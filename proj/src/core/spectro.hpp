#pragma once

// Raman-resonance spectroscopy: emission scans across the cavity detuning,
// Lorentzian line fitting, the coupling-induced shift delta of the resonance
// from the nominal condition Delta_cavity = Delta_pump, the simulated
// delta(g0, Delta_pump) map, and the one-parameter g0 fit against that map.
//
// At strong coupling the emission maximum is the dressed-state resonance,
// displaced from the nominal condition by roughly g_eff^2 / |Delta_pump|
// (tens of MHz at full coupling), so shift measurements start from a window
// centred on the nominal resonance and re-centre the scan on the located
// maximum until the peak is interior.

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "model.hpp"

namespace icq::spectro {

struct ScanSample {
  double cavity_detuning = 0.0; // rad/s
  double emission = 0.0;        // photons per probe window
  double stderr_ = 0.0;         // 0 = unweighted
};

struct RamanScan {
  double probe_detuning = 0.0; // rad/s
  std::vector<ScanSample> points;

  // >= 8 samples, detunings strictly increasing, stderrs uniformly zero or
  // uniformly positive
  void validate() const;
};

// offset + amplitude / (1 + (2 (x - center) / fwhm)^2)
struct LorentzianFitResult {
  double center = 0.0;    // rad/s
  double fwhm = 0.0;      // rad/s, > 0
  double amplitude = 0.0; // > 0
  double offset = 0.0;
  Eigen::Matrix4d covariance; // parameter order (center, fwhm, amplitude, offset)
};

struct ShiftPoint {
  double probe_detuning = 0.0; // rad/s
  double shift = 0.0;          // rad/s, fitted center - probe_detuning
  double stderr_ = 0.0;        // rad/s
};

// Emission versus cavity detuning at fixed probe detuning; the pump detuning
// in params is replaced by probe_detuning, everything else is used as given.
RamanScan raman_scan(double probe_detuning, const std::vector<double>& cavity_detunings,
                     const model::SystemParams& params, double tol = 1e-6,
                     double duration = 300e-9);

// Weighted least squares of the four Lorentzian parameters, initialised from
// the raw maximum and its half-height crossings.  The scan maximum must be
// interior (bracket error otherwise) and the fitted center must stay inside
// the scanned interval.
LorentzianFitResult fit_lorentzian(const RamanScan& scan);

// delta = fitted center - probe detuning; stderr from the fit covariance.
ShiftPoint raman_shift(const RamanScan& scan);

struct ShiftOptions {
  int scan_points = 41;
  double window_halfwidth = 0.0; // rad/s; <= 0 means 3 kappa
  int max_recenter = 6;          // window re-centres before giving up
  double tol = 1e-6;             // integrator tolerance per emission solve
  double duration = 300e-9;      // probe window
};

struct ShiftMeasurement {
  RamanScan scan; // final (re-centred) scan
  LorentzianFitResult fit;
  ShiftPoint point;
};

// Scan + fit with automatic window re-centring; solves are cached across
// re-centres (shifted windows stay grid-aligned).
ShiftMeasurement measure_shift(double probe_detuning, const model::SystemParams& params,
                               const ShiftOptions& options = {});

struct MapOptions {
  ShiftOptions shift{};
  double refine_threshold = 0.0; // rad/s; <= 0 means 2 pi x 1 MHz
  int refine_rounds = 2;         // midpoint-insertion passes over the probe grid
  int threads = 0;               // 0 = hardware concurrency
};

// Simulated shift over a (g0, probe-detuning) grid.  Rows follow g0.  After
// the base build, probe columns are inserted at interval midpoints wherever
// some row jumps by more than refine_threshold, up to refine_rounds times.
struct DeltaMap {
  std::vector<double> g0_grid;    // rad/s, ascending
  std::vector<double> probe_grid; // rad/s, ascending (refinement may extend it)
  Eigen::MatrixXd delta;          // rows follow g0_grid, columns probe_grid
  int refine_rounds_used = 0;
  double max_adjacent_jump = 0.0; // rad/s, over rows of the final grid

  void validate() const;

  // Shape-preserving cubic along the probe axis, cubic along g0.  Arguments
  // must lie inside the respective grids.
  double value(double g0, double probe_detuning) const;

  // {"g0_mhz": [...], "delta_p_mhz": [...], "delta_mhz": [[...]]}, row-major
  // over g0, frequencies as frequency / 2 pi in MHz
  nlohmann::json to_json() const;
  static DeltaMap from_json(const nlohmann::json& j);
};

DeltaMap build_delta_map(const std::vector<double>& g0_grid,
                         const std::vector<double>& probe_grid,
                         const model::SystemParams& params, const MapOptions& options = {});

struct G0Fit {
  double g0 = 0.0;      // rad/s
  double stderr_ = 0.0; // rad/s, half-width of the chi2_min + 1 interval
  double chi2 = 0.0;
};

// One-dimensional weighted least squares of measured shifts against the map;
// the only free parameter is g0.  The optimum must be interior to the g0
// grid and every probe detuning must lie inside the probe grid.
G0Fit fit_g0(const std::vector<ShiftPoint>& points, const DeltaMap& map);

} // namespace icq::spectro
