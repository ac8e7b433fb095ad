#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "core/model.hpp"
#include "core/spectro.hpp"
#include "core/units.hpp"

using namespace icq;
using namespace icq::model;
using icq::units::two_pi;

namespace {
constexpr double kMHz = two_pi * 1e6;
}

TEST_CASE("standing-wave coupling follows g0 sin(k x)") {
  const auto cav = CavityParams::defaults();
  const double quarter = cav.wavelength / 4.0;
  CHECK(local_coupling(0.0, cav) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(local_coupling(quarter, cav) == doctest::Approx(cav.g0).epsilon(1e-12));
  CHECK(local_coupling(quarter / 2.0, cav) ==
        doctest::Approx(cav.g0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(std::abs(local_coupling(2.0 * quarter, cav)) < 1e-12 * cav.g0);
  CHECK(local_coupling(-quarter, cav) == doctest::Approx(-cav.g0).epsilon(1e-12));
}

TEST_CASE("position origin: antinode origin offsets by a quarter wavelength") {
  auto p = SystemParams::defaults();
  const double quarter = p.cavity.wavelength / 4.0;
  p.coupling_phase_origin = PhaseOrigin::node;
  p.position = quarter;
  const double from_node = p.position_from_node();
  p.coupling_phase_origin = PhaseOrigin::antinode;
  p.position = 0.0;
  CHECK(p.position_from_node() == doctest::Approx(from_node).epsilon(1e-12));
}

TEST_CASE("each P sublevel decays at the total rate gamma") {
  const auto params = SystemParams::defaults();
  const auto me = build_system(params);
  const auto space = system_space(params);
  const int nf = params.cavity.n_max + 1;
  for (int p_level : {P_down, P_up}) {
    qdyn::Vector ket = qdyn::Vector::Zero(space.total());
    ket[p_level * nf * nf] = 1.0; // |P, vac, vac>
    double total = 0.0;
    for (const auto& ch : me.channels()) {
      total += ch.rate * (ch.op.mat * ket).squaredNorm();
    }
    // cavity-loss channels contribute nothing from the vacuum, so the sum is
    // the radiative width of the P sublevel
    CHECK(total == doctest::Approx(params.ion.gamma).epsilon(1e-12));
  }
}

TEST_CASE("excited P population decays exponentially with pump off") {
  auto params = SystemParams::defaults();
  params.lasers[0].rabi = 0.0;
  params.cavity.g0 = 0.0; // pure spontaneous emission
  const auto me = build_system(params);
  const auto space = system_space(params);
  const int nf = params.cavity.n_max + 1;
  qdyn::Vector ket = qdyn::Vector::Zero(space.total());
  ket[P_down * nf * nf] = 1.0;
  const auto rho0 = qdyn::DensityMatrix::pure(space, ket);

  const double t = 30e-9;
  qdyn::EvolveOptions opts;
  opts.tol = 1e-10;
  const auto rho = qdyn::evolve_final(rho0, me, t, opts);
  double p_pop = 0.0;
  for (int lvl : {P_down, P_up}) {
    for (int k = 0; k < nf * nf; ++k) {
      const int idx = lvl * nf * nf + k;
      p_pop += rho.mat(idx, idx).real();
    }
  }
  CHECK(p_pop == doctest::Approx(std::exp(-params.ion.gamma * t)).epsilon(1e-6));
}

TEST_CASE("ground manifold is stationary without pump or repump") {
  auto params = SystemParams::defaults();
  params.lasers[0].rabi = 0.0;
  const auto me = build_system(params);
  const auto rho0 = initial_probe_state(params);
  const auto rho = qdyn::evolve_final(rho0, me, 200e-9, {});
  CHECK((rho.mat - rho0.mat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("decoupled cavity stays empty under the pump") {
  auto params = SystemParams::defaults();
  params.cavity.g0 = 0.0;
  params.repump_rate = 0.1 * kMHz; // keep the steady state unique
  const auto me = build_system(params);
  const auto rho = qdyn::steady_state(me);
  const auto n_op = photon_number(params);
  CHECK(std::abs(qdyn::expectation(rho, n_op)) < 1e-10);
  CHECK(emission_rate(rho, params) < 1e-10 * params.cavity.kappa);
}

TEST_CASE("emission rate equals kappa times the photon number") {
  const auto params = SystemParams::defaults();
  const auto space = system_space(params);
  const int nf = params.cavity.n_max + 1;
  qdyn::Vector ket = qdyn::Vector::Zero(space.total());
  ket[S_down * nf * nf + 1 * nf + 0] = 1.0; // |S, n1 = 1, n2 = 0>
  const auto rho = qdyn::DensityMatrix::pure(space, ket);
  CHECK(emission_rate(rho, params) ==
        doctest::Approx(params.cavity.kappa).epsilon(1e-12));
}

TEST_CASE("probe state: even S mixture in vacuum") {
  const auto params = SystemParams::defaults();
  const auto rho = initial_probe_state(params);
  qdyn::validate_density(rho);
  const int nf = params.cavity.n_max + 1;
  CHECK(rho.mat(S_down * nf * nf, S_down * nf * nf).real() == doctest::Approx(0.5));
  CHECK(rho.mat(S_up * nf * nf, S_up * nf * nf).real() == doctest::Approx(0.5));
  const auto n_op = photon_number(params);
  CHECK(std::abs(qdyn::expectation(rho, n_op)) < 1e-15);
}

TEST_CASE("photon probability scales quadratically at weak coupling") {
  auto params = SystemParams::defaults();
  params.cavity.g0 = 0.1 * kMHz;
  const double p1 = photon_probability(params, 300e-9, 1e-9);
  params.cavity.g0 = 0.2 * kMHz;
  const double p2 = photon_probability(params, 300e-9, 1e-9);
  CHECK(p2 / p1 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("Fock-space truncation is converged at the probe condition") {
  auto params = SystemParams::defaults();
  const double p1 = photon_probability(params, 300e-9, 1e-8);
  params.cavity.n_max = 2;
  const double p2 = photon_probability(params, 300e-9, 1e-8);
  CHECK(p1 == doctest::Approx(p2).epsilon(1e-3));
}

TEST_CASE("emission is invariant under half-wavelength shifts and mirroring") {
  auto params = SystemParams::defaults();
  params.coupling_phase_origin = PhaseOrigin::node;
  const double x = 0.3 * params.cavity.wavelength / 4.0;
  params.position = x;
  const double base = photon_probability(params, 300e-9, 1e-8);
  params.position = x + params.cavity.wavelength / 2.0;
  CHECK(photon_probability(params, 300e-9, 1e-8) == doctest::Approx(base).epsilon(1e-6));
  params.position = -x;
  CHECK(photon_probability(params, 300e-9, 1e-8) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("empty-cavity transmission recovers kappa as its fitted width") {
  const auto cav = CavityParams::defaults();
  std::vector<double> detunings;
  for (int i = 0; i < 41; ++i) {
    detunings.push_back((-3.0 + 6.0 * i / 40.0) * cav.kappa);
  }
  const auto scan = empty_cavity_scan(detunings, cav.kappa);
  spectro::RamanScan as_scan;
  as_scan.probe_detuning = 0.0;
  for (const auto& pt : scan) as_scan.points.push_back({pt.x, pt.value, 0.0});
  const auto fit = spectro::fit_lorentzian(as_scan);
  CHECK(fit.fwhm == doctest::Approx(cav.kappa).epsilon(1e-8));
  CHECK(std::abs(fit.center) < 1e-8 * cav.kappa);
  CHECK(fit.amplitude == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(fit.offset) < 1e-8);
}

TEST_CASE("emission curve interpolates the direct solves") {
  auto params = SystemParams::defaults();
  const EmissionCurve curve(params, 300e-9, 33, 1e-8);
  params.coupling_phase_origin = PhaseOrigin::node;
  for (double frac : {1.0, 0.71, 0.37}) {
    const double x = frac * params.cavity.wavelength / 4.0;
    params.position = x;
    const double direct = photon_probability(params, 300e-9, 1e-8);
    CHECK(curve.at_position(x) == doctest::Approx(direct).epsilon(2e-3));
  }
}

TEST_CASE("parameter validation names the offending field") {
  auto params = SystemParams::defaults();
  params.lasers.push_back(LaserField::pi_polarized(1.0, 0.0));
  CHECK_THROWS_WITH_AS(params.validate(), doctest::Contains("exactly one pump laser"),
                       Error);
  params = SystemParams::defaults();
  params.cavity.g0 = -1.0;
  CHECK_THROWS_WITH_AS(params.validate(), doctest::Contains("negative coupling"), Error);
  params = SystemParams::defaults();
  params.cavity.n_max = 0;
  CHECK_THROWS_WITH_AS(params.validate(), doctest::Contains("n_max"), Error);
  params = SystemParams::defaults();
  params.repump_rate = -1.0;
  CHECK_THROWS_WITH_AS(params.validate(), doctest::Contains("negative repump rate"),
                       Error);
}
