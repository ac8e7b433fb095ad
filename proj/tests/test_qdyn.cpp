#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/qdyn.hpp"
#include "core/units.hpp"
#include "oracles.hpp"

using namespace icq;
using namespace icq::qdyn;
using icq::units::two_pi;

namespace {

Matrix sigma_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix sigma_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix sigma_minus() { // |g><e| with basis {g, e} = {0, 1}
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  return m;
}

DensityMatrix excited(const HilbertSpace& hs) {
  Vector ket = Vector::Zero(2);
  ket(1) = 1.0;
  return DensityMatrix::pure(hs, ket);
}

DensityMatrix ground(const HilbertSpace& hs) {
  Vector ket = Vector::Zero(2);
  ket(0) = 1.0;
  return DensityMatrix::pure(hs, ket);
}

} // namespace

TEST_CASE("kron matches the direct index formula") {
  std::mt19937_64 rng(7);
  const Matrix a = oracles::random_matrix(3, rng);
  const Matrix b = oracles::random_matrix(2, rng);
  CHECK((kron(a, b) - oracles::kron_ref(a, b)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((kron(b, a) - oracles::kron_ref(b, a)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("embed places factors with the documented ordering") {
  const auto hs = HilbertSpace::make({2, 2});
  // slot 1 is the innermost factor: I kron sigma_z
  Operator inner = embed(sigma_z(), hs, 1);
  Matrix want = oracles::kron_ref(Matrix::Identity(2, 2), sigma_z());
  CHECK((inner.mat - want).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(inner.mat(0, 0).real() == doctest::Approx(1.0));
  CHECK(inner.mat(1, 1).real() == doctest::Approx(-1.0));
  CHECK(inner.mat(2, 2).real() == doctest::Approx(1.0));
  CHECK(inner.mat(3, 3).real() == doctest::Approx(-1.0));

  Operator outer = embed(sigma_z(), hs, 0);
  want = oracles::kron_ref(sigma_z(), Matrix::Identity(2, 2));
  CHECK((outer.mat - want).cwiseAbs().maxCoeff() < 1e-15);

  const auto hs3 = HilbertSpace::make({2, 3, 2});
  std::mt19937_64 rng(11);
  const Matrix mid = oracles::random_matrix(3, rng);
  Operator op = embed(mid, hs3, 1);
  want = oracles::kron_ref(oracles::kron_ref(Matrix::Identity(2, 2), mid),
                           Matrix::Identity(2, 2));
  CHECK((op.mat - want).cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(embed(sigma_z(), hs, 2), Error);
  CHECK_THROWS_AS(embed(oracles::random_matrix(3, rng), hs, 0), Error);
}

TEST_CASE("hilbert space validation") {
  CHECK(HilbertSpace::make({8, 2, 2}).total() == 32);
  CHECK_THROWS_AS(HilbertSpace::make({}), Error);
  CHECK_THROWS_AS(HilbertSpace::make({2, 0}), Error);
}

TEST_CASE("density matrix factories and validation") {
  const auto hs = HilbertSpace::make({2});
  Vector ket(2);
  ket << 3.0, 4.0; // unnormalised on purpose
  auto rho = DensityMatrix::pure(hs, ket);
  CHECK(std::abs(rho.mat.trace() - std::complex<double>(1.0)) < 1e-14);
  CHECK(rho.mat(0, 0).real() == doctest::Approx(9.0 / 25.0));

  CHECK_THROWS_AS(DensityMatrix::pure(hs, Vector::Zero(2)), Error);

  Matrix bad = sigma_minus(); // not hermitian
  CHECK_THROWS_WITH_AS(static_cast<void>(DensityMatrix::from_matrix(hs, bad)),
                       doctest::Contains("hermitian"), Error);

  Matrix offtrace = 0.5 * Matrix::Identity(2, 2) * 3.0;
  CHECK_THROWS_WITH_AS(static_cast<void>(DensityMatrix::from_matrix(hs, offtrace)),
                       doctest::Contains("trace"), Error);

  Matrix negative(2, 2);
  negative << 1.5, 0.0, 0.0, -0.5;
  CHECK_THROWS_WITH_AS(static_cast<void>(DensityMatrix::from_matrix(hs, negative)),
                       doctest::Contains("eigenvalue"), Error);
}

TEST_CASE("expectation values") {
  const auto hs = HilbertSpace::make({2});
  auto rho = ground(hs);
  Operator sz{hs, sigma_z()};
  CHECK(expectation(rho, sz).real() == doctest::Approx(1.0));
  CHECK(expectation(excited(hs), sz).real() == doctest::Approx(-1.0));

  const auto other = HilbertSpace::make({3});
  Operator wrong{other, Matrix::Identity(3, 3)};
  CHECK_THROWS_AS(expectation(rho, wrong), Error);

  // tr(O rho) for random hermitian pairs against a loop evaluation
  std::mt19937_64 rng(3);
  const auto hs4 = HilbertSpace::make({4});
  Matrix o = oracles::random_hermitian(4, rng);
  Matrix r = oracles::random_density(4, rng);
  std::complex<double> direct = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) direct += o(i, j) * r(j, i);
  auto got = expectation(DensityMatrix::from_matrix(hs4, r), Operator{hs4, o});
  CHECK(std::abs(got - direct) < 1e-13);
}

TEST_CASE("master equation construction rejects bad input") {
  const auto hs = HilbertSpace::make({2});
  Operator h{hs, sigma_minus()}; // not hermitian
  CHECK_THROWS_WITH_AS(MasterEquation(h, {}), doctest::Contains("hermitian"), Error);

  Operator hx{hs, sigma_x()};
  CHECK_THROWS_AS(MasterEquation(hx, {{Operator{hs, sigma_minus()}, -1.0}}), Error);

  const auto other = HilbertSpace::make({3});
  CHECK_THROWS_AS(MasterEquation(hx, {{Operator{other, Matrix::Zero(3, 3)}, 1.0}}), Error);
}

TEST_CASE("lindblad derivative matches the hand-expanded generator") {
  const auto hs = HilbertSpace::make({3});
  std::mt19937_64 rng(19);
  const Matrix h = oracles::random_hermitian(3, rng) * 1e8;
  const Matrix l = oracles::random_matrix(3, rng);
  const double rate = 3.7e7;
  const Matrix rho = oracles::random_density(3, rng);

  MasterEquation me(Operator{hs, h}, {{Operator{hs, l}, rate}});
  Operator got = lindblad_derivative(DensityMatrix::from_matrix(hs, rho), me);

  const std::complex<double> mi(0.0, -1.0);
  Matrix want = mi * (h * rho - rho * h);
  want += rate * (l * rho * l.adjoint() -
                  0.5 * (l.adjoint() * l * rho + rho * l.adjoint() * l));
  CHECK((got.mat - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(std::abs(got.mat.trace()) / want.cwiseAbs().maxCoeff() < 1e-13); // trace-free
}

TEST_CASE("two-level spontaneous decay matches the exponential law") {
  const auto hs = HilbertSpace::make({2});
  const double gamma = two_pi * 11.5e6;
  const double t_final = 50e-9; // gamma t = 3.6128, excited population 0.0269747
  MasterEquation me(Operator::zero(hs), {{Operator{hs, sigma_minus()}, gamma}});

  auto rho = evolve_final(excited(hs), me, t_final, {.tol = 1e-10});
  const double want = oracles::decay_excited_population(gamma, t_final);
  CHECK(std::abs(rho.mat(1, 1).real() - want) < 1e-6);
  CHECK(std::abs(rho.mat(0, 0).real() - (1.0 - want)) < 1e-6);
  CHECK(std::abs(rho.mat(0, 1)) < 1e-9);
}

TEST_CASE("resonant Rabi oscillation matches the analytic cosine") {
  const auto hs = HilbertSpace::make({2});
  const double omega = two_pi * 14.0e6;
  MasterEquation me(Operator{hs, 0.5 * omega * sigma_x()}, {});

  const double t_pi = units::pi / omega;
  auto rho = evolve_final(ground(hs), me, t_pi, {.tol = 1e-10});
  CHECK(std::abs(rho.mat(1, 1).real() - 1.0) < 1e-6);

  const double t_mid = 0.37 * t_pi;
  rho = evolve_final(ground(hs), me, t_mid, {.tol = 1e-10});
  CHECK(std::abs(rho.mat(1, 1).real() - oracles::rabi_excited_population(omega, t_mid)) < 1e-6);
}

TEST_CASE("damped Rabi steady state matches the optical Bloch result") {
  const auto hs = HilbertSpace::make({2});
  const double omega = two_pi * 11.8e6;
  const double gamma = two_pi * 11.5e6;
  MasterEquation me(Operator{hs, 0.5 * omega * sigma_x()},
                    {{Operator{hs, sigma_minus()}, gamma}});

  auto ss = steady_state(me);
  const double want = oracles::bloch_steady_excited(omega, gamma);
  CHECK(std::abs(ss.mat(1, 1).real() - want) < 1e-10);

  // long evolution relaxes onto the same state
  auto rho = evolve_final(ground(hs), me, 45.0 / gamma, {.tol = 1e-10});
  CHECK((rho.mat - ss.mat).cwiseAbs().maxCoeff() < 1e-6);

  // residual of the claimed fixed point is tiny
  auto deriv = lindblad_derivative(ss, me);
  CHECK(deriv.mat.cwiseAbs().maxCoeff() / gamma < 1e-10);
}

TEST_CASE("dark states stay put") {
  const auto hs = HilbertSpace::make({2});
  const double gamma = two_pi * 11.5e6;
  MasterEquation me(Operator::zero(hs), {{Operator{hs, sigma_minus()}, gamma}});

  auto rho = evolve_final(ground(hs), me, 1e-6, {.tol = 1e-8});
  CHECK(std::abs(rho.mat(0, 0).real() - 1.0) < 1e-12);
  CHECK(std::abs(rho.mat(1, 1)) < 1e-12);

  auto ss = steady_state(me);
  CHECK(std::abs(ss.mat(0, 0).real() - 1.0) < 1e-12);
}

TEST_CASE("degenerate Liouvillian is rejected with its null-space dimension") {
  const auto hs = HilbertSpace::make({2});
  MasterEquation me(Operator::zero(hs), {});
  CHECK_THROWS_WITH_AS(steady_state(me), doctest::Contains("dimension 4"), Error);
  try {
    steady_state(me);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
}

TEST_CASE("trace, hermiticity and positivity survive randomized evolutions") {
  std::mt19937_64 rng(101);
  const std::vector<std::vector<int>> shapes = {{2}, {3}, {2, 2}, {4}, {2, 3}};
  std::uniform_int_distribution<int> shape_pick(0, static_cast<int>(shapes.size()) - 1);
  std::uniform_int_distribution<int> nchan(0, 3);
  std::uniform_real_distribution<double> uni(0.2, 1.0);

  for (int trial = 0; trial < 60; ++trial) {
    const auto hs = HilbertSpace::make(shapes[static_cast<std::size_t>(shape_pick(rng))]);
    const int n = hs.total();
    const double w0 = 1e8 * uni(rng);
    MasterEquation me(Operator{hs, oracles::random_hermitian(n, rng) * w0}, [&] {
      std::vector<CollapseChannel> chans;
      const int k = nchan(rng);
      for (int c = 0; c < k; ++c)
        chans.push_back({Operator{hs, oracles::random_matrix(n, rng)}, 2e7 * uni(rng)});
      return chans;
    }());
    auto rho0 = DensityMatrix::from_matrix(hs, oracles::random_density(n, rng));

    auto rho = evolve_final(rho0, me, 3.0 / w0, {.tol = 1e-8});
    CHECK(std::abs(rho.mat.trace().real() - 1.0) < 1e-10);
    CHECK(std::abs(rho.mat.trace().imag()) < 1e-12);
    CHECK((rho.mat - rho.mat.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("integrator halves its error by the nominal order under step halving") {
  const auto hs = HilbertSpace::make({2});
  const double gamma = two_pi * 11.5e6;
  const double t_final = 50e-9;
  MasterEquation me(Operator::zero(hs), {{Operator{hs, sigma_minus()}, gamma}});
  const double exact = oracles::decay_excited_population(gamma, t_final);

  auto error_at = [&](int steps) {
    auto rho = evolve_fixed_step(excited(hs), me, t_final, steps);
    return std::abs(rho.mat(1, 1).real() - exact);
  };
  const double e1 = error_at(8);
  const double e2 = error_at(16);
  REQUIRE(e1 > 1e-12); // stay clear of roundoff so the ratio is meaningful
  const double ratio = e1 / e2;
  CHECK(ratio > 16.0);
  CHECK(ratio < 64.0);
}

TEST_CASE("halving the adaptive tolerance moves the answer by less than 10x tol") {
  const auto hs = HilbertSpace::make({2});
  const double omega = two_pi * 11.8e6;
  const double gamma = two_pi * 11.5e6;
  MasterEquation me(Operator{hs, 0.5 * omega * sigma_x()},
                    {{Operator{hs, sigma_minus()}, gamma}});
  const double tol = 1e-8;
  auto a = evolve_final(ground(hs), me, 300e-9, {.tol = tol});
  auto b = evolve_final(ground(hs), me, 300e-9, {.tol = tol / 2});
  CHECK((a.mat - b.mat).cwiseAbs().maxCoeff() < 10.0 * tol);
}

TEST_CASE("expectation integral matches the closed-form time integral") {
  const auto hs = HilbertSpace::make({2});
  const double gamma = two_pi * 11.5e6;
  const double t_final = 120e-9;
  MasterEquation me(Operator::zero(hs), {{Operator{hs, sigma_minus()}, gamma}});

  Matrix pe = Matrix::Zero(2, 2);
  pe(1, 1) = 1.0;
  auto res = integrate_expectation(excited(hs), me, t_final, {Operator{hs, pe}},
                                   {.tol = 1e-10});
  const double want = (1.0 - std::exp(-gamma * t_final)) / gamma;
  CHECK(std::abs(res.integrals[0] - want) / want < 1e-8);
  CHECK(res.accepted_steps > 0);
}

TEST_CASE("sample times return states along the way") {
  const auto hs = HilbertSpace::make({2});
  const double gamma = two_pi * 11.5e6;
  MasterEquation me(Operator::zero(hs), {{Operator{hs, sigma_minus()}, gamma}});

  const std::vector<double> times = {0.0, 20e-9, 50e-9, 80e-9};
  auto traj = evolve(excited(hs), me, 80e-9, {.tol = 1e-10}, times);
  REQUIRE(traj.times.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(traj.times[i] == doctest::Approx(times[i]));
    const double want = oracles::decay_excited_population(gamma, times[i]);
    CHECK(std::abs(traj.states[i].mat(1, 1).real() - want) < 1e-7);
  }
}

TEST_CASE("zero duration returns the initial state") {
  const auto hs = HilbertSpace::make({2});
  MasterEquation me(Operator::zero(hs), {});
  auto traj = evolve(excited(hs), me, 0.0);
  REQUIRE(traj.states.size() == 1);
  CHECK(traj.states[0].mat(1, 1).real() == doctest::Approx(1.0));
}

TEST_CASE("evolve rejects invalid requests") {
  const auto hs = HilbertSpace::make({2});
  MasterEquation me(Operator::zero(hs), {});
  CHECK_THROWS_AS(evolve(excited(hs), me, -1.0), Error);
  CHECK_THROWS_AS(evolve(excited(hs), me, 1e-6, {.tol = 0.0}), Error);
  CHECK_THROWS_AS(evolve(excited(hs), me, 1e-6, {}, {0.0, 2e-6}), Error);
  CHECK_THROWS_AS(evolve(excited(hs), me, 1e-6, {}, {5e-7, 4e-7}), Error);

  const auto other = HilbertSpace::make({3});
  MasterEquation me3(Operator::zero(other), {});
  CHECK_THROWS_AS(evolve(excited(hs), me3, 1e-6), Error);
}
