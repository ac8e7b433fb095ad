#pragma once

// Gaussian localisation model: thermal and micromotion position widths,
// Gaussian averaging of position-dependent emission, effective coupling,
// standing-wave scan synthesis and fitting, and fringe visibility.
//
// "Spread" is the 1/e half-width of the Gaussian position density, sqrt(2)
// times its standard deviation; this convention reconciles the quoted
// spread/temperature pairs with equipartition in the axial trap potential.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace icq::localize {

// sqrt(k_B T / (m omega_ax^2)): equipartition width of the thermal Gaussian
double thermal_sigma(double temperature, const model::TrapParams& trap);

// 1/e half-width of the density: sqrt(2) sigma
double spread(double sigma);

// inverse of spread(thermal_sigma(T)); round-trips to machine precision
double temperature_from_spread(double spread_value, const model::TrapParams& trap);

// excess-micromotion width (q/2) |x0| at distance x0 from the rf null
double micromotion_sigma(double x0, const model::TrapParams& trap);

struct PositionDistribution {
  double mean = 0.0;              // m
  double sigma_thermal = 0.0;     // m
  double sigma_micromotion = 0.0; // m
  double x0 = 0.0;                // m, distance from the rf null (provenance)

  // thermal and micromotion widths combined in quadrature
  double total_sigma() const;
  void validate() const;

  static PositionDistribution thermal(double mean, double temperature,
                                      const model::TrapParams& trap);
  // thermal + micromotion at distance x0 from the rf null
  static PositionDistribution with_micromotion(double mean, double temperature, double x0,
                                               const model::TrapParams& trap);
};

// Gaussian average of curve(x) over the distribution, by adaptive
// Gauss-Hermite quadrature; sigma = 0 evaluates curve(mean) directly.
double smear(const std::function<double(double)>& curve, const PositionDistribution& dist);

enum class CouplingMoment {
  first,  // <cos k dx> at an antinode: g0 exp(-k^2 sigma^2 / 2)
  second, // rms of the mode function: g0 sqrt((1 + exp(-2 k^2 sigma^2)) / 2)
};

double effective_coupling(double g0, double sigma, double wavenumber,
                          CouplingMoment moment = CouplingMoment::first);

struct SwScanPoint {
  double position = 0.0; // control units or metres, caller's choice
  double emission = 0.0;
  double stderr_ = 0.0;
};

struct StandingWaveScan {
  std::vector<SwScanPoint> points;
  bool normalised = false; // max value scaled to 1

  void validate() const;
};

struct ScanOptions {
  bool normalise = false;
  double tol = 1e-8;      // integrator tolerance for the emission curve
  int curve_samples = 33; // |g| grid size behind the curve
  double duration = 300e-9;
};

// Emission versus ion position (metres from a node), each point smeared with
// the fixed width of dist; dist.mean is ignored, the scan position is the
// Gaussian centre at every point.
StandingWaveScan standing_wave_scan(const std::vector<double>& positions,
                                    const model::SystemParams& params,
                                    const PositionDistribution& dist,
                                    const ScanOptions& options = {});

struct StandingWaveFit {
  double x_scale = 0.0; // metres per control unit
  double y_scale = 0.0; // counts per emission probability
  double sigma = 0.0;   // m, thermal localisation width
  double x0 = 0.0;      // m, micromotion minimum in standing-wave coordinates
  double residual = 0.0;        // rms of weighted residuals
  Eigen::Matrix4d covariance;   // order (x_scale, y_scale, sigma, x0)
};

struct SwFitOptions {
  double curve_tol = 1e-8;
  int curve_samples = 33;
  double duration = 300e-9;
  int restarts = 3; // jittered re-initialisations before giving up
};

// Least squares of (x_scale, y_scale, sigma, x0) against the smeared model:
// position x = x_scale * ctrl measured from a node, local width
// sqrt(sigma^2 + ((q/2)(x - x0))^2).  The data must cover at least one
// standing-wave period.
StandingWaveFit fit_standing_wave(const StandingWaveScan& data,
                                  const model::SystemParams& params,
                                  const SwFitOptions& options = {});

// (max - min) / (max + min) of the shape-preserving interpolant through the
// scan (smoothed extrema, not raw samples)
double visibility(const StandingWaveScan& scan);

} // namespace icq::localize
