#include "model.hpp"

#include <cmath>
#include <string>

#include "cg.hpp"
#include "error.hpp"
#include "units.hpp"

namespace icq::model {

using qdyn::DensityMatrix;
using qdyn::HilbertSpace;
using qdyn::Matrix;
using qdyn::MasterEquation;
using qdyn::Operator;
using qdyn::Vector;
using units::two_pi;

namespace {

struct LevelQn {
  int two_j;
  int two_m;
};

// quantum numbers behind each basis index
constexpr LevelQn kQn[n_ion_levels] = {
    {1, -1}, {1, 1},          // S1/2
    {1, -1}, {1, 1},          // P1/2
    {3, -3}, {3, -1}, {3, 1}, {3, 3}, // D3/2
};

constexpr int kSLevels[] = {S_down, S_up};
constexpr int kPLevels[] = {P_down, P_up};
constexpr int kDLevels[] = {D_m32, D_m12, D_p12, D_p32};

Matrix ion_ketbra(int i, int j) {
  Matrix m = Matrix::Zero(n_ion_levels, n_ion_levels);
  m(i, j) = 1.0;
  return m;
}

Matrix annihilation(int nf) {
  Matrix a = Matrix::Zero(nf, nf);
  for (int n = 1; n < nf; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

void check_polarization(const Polarization& e, const std::string& who) {
  double norm2 = 0.0;
  for (const auto& c : e) norm2 += std::norm(c);
  require(std::abs(norm2 - 1.0) <= 1e-9,
          who + ": polarization vector norm^2 = " + std::to_string(norm2) + ", expected 1");
}

} // namespace

IonLevels IonLevels::calcium_default() {
  IonLevels ion;
  ion.gamma = two_pi * 11.5e6;
  ion.branching_s = 0.936;
  ion.branching_d = 0.064;
  ion.zeeman_shifts.fill(0.0);
  return ion;
}

void IonLevels::validate() const {
  require(gamma > 0.0, "ion levels: gamma must be positive");
  require(branching_s >= 0.0 && branching_d >= 0.0, "ion levels: negative branching fraction");
  require(std::abs(branching_s + branching_d - 1.0) <= 1e-9,
          "ion levels: branching fractions sum to " + std::to_string(branching_s + branching_d) +
              ", expected 1");
  for (double z : zeeman_shifts)
    require(std::isfinite(z), "ion levels: non-finite Zeeman shift");
}

LaserField LaserField::pi_polarized(double rabi, double detuning) {
  return {rabi, detuning, {Complex(0.0), Complex(1.0), Complex(0.0)}};
}

void LaserField::validate() const {
  require(rabi >= 0.0, "laser: negative Rabi frequency");
  require(std::isfinite(detuning), "laser: non-finite detuning");
  check_polarization(polarization, "laser");
}

CavityParams CavityParams::defaults() {
  CavityParams c;
  c.g0 = two_pi * 17.3e6;
  c.kappa = two_pi * 8.2e6;
  c.detuning = -two_pi * 10.0e6; // nominal Raman resonance with the default pump
  c.wavelength = 866e-9;
  c.n_max = 1;
  c.mode_polarizations = {Polarization{Complex(1.0), Complex(0.0), Complex(0.0)},
                          Polarization{Complex(0.0), Complex(0.0), Complex(1.0)}};
  return c;
}

void CavityParams::validate() const {
  require(g0 >= 0.0, "cavity: negative coupling");
  require(kappa > 0.0, "cavity: kappa must be positive");
  require(std::isfinite(detuning), "cavity: non-finite detuning");
  require(wavelength > 0.0, "cavity: wavelength must be positive");
  require(n_max >= 1 && n_max <= 6, "cavity: n_max must be in [1, 6]");
  check_polarization(mode_polarizations[0], "cavity mode 1");
  check_polarization(mode_polarizations[1], "cavity mode 2");
  Complex overlap = 0.0;
  for (int q = 0; q < 3; ++q)
    overlap += std::conj(mode_polarizations[0][static_cast<std::size_t>(q)]) *
               mode_polarizations[1][static_cast<std::size_t>(q)];
  require(std::abs(overlap) <= 1e-9, "cavity: mode polarizations are not orthogonal");
}

double CavityParams::wavenumber() const { return two_pi / wavelength; }

TrapParams TrapParams::defaults() {
  TrapParams t;
  t.omega_axial = two_pi * 2.73e6;
  t.omega_rf = two_pi * 19.55e6;
  t.q_param = 0.1;
  t.mass = 40.0 * units::atomic_mass_kg;
  return t;
}

void TrapParams::validate() const {
  require(omega_axial > 0.0, "trap: secular frequency must be positive");
  require(omega_rf > 0.0, "trap: drive frequency must be positive");
  require(q_param > 0.0 && q_param < 0.9, "trap: Mathieu q outside (0, 0.9)");
  require(mass > 0.0, "trap: mass must be positive");
}

SystemParams SystemParams::defaults() {
  SystemParams p;
  p.ion = IonLevels::calcium_default();
  p.cavity = CavityParams::defaults();
  p.trap = TrapParams::defaults();
  p.lasers = {LaserField::pi_polarized(two_pi * 11.8e6, -two_pi * 10.0e6)};
  p.position = p.cavity.wavelength / 4.0; // antinode
  p.coupling_phase_origin = PhaseOrigin::node;
  p.repump_rate = 0.0;
  return p;
}

void SystemParams::validate() const {
  ion.validate();
  cavity.validate();
  trap.validate();
  require(lasers.size() == 1, "system: expected exactly one pump laser, got " +
                                  std::to_string(lasers.size()));
  lasers[0].validate();
  require(std::isfinite(position), "system: non-finite position");
  require(repump_rate >= 0.0, "system: negative repump rate");
}

double SystemParams::position_from_node() const {
  return (coupling_phase_origin == PhaseOrigin::node) ? position
                                                      : position + cavity.wavelength / 4.0;
}

double local_coupling(double x_from_node, const CavityParams& cavity) {
  return cavity.g0 * std::sin(cavity.wavenumber() * x_from_node);
}

HilbertSpace system_space(const SystemParams& params) {
  const int nf = params.cavity.n_max + 1;
  return HilbertSpace::make({n_ion_levels, nf, nf});
}

MasterEquation build_system(const SystemParams& params) {
  params.validate();
  const HilbertSpace hs = system_space(params);
  const int nf = params.cavity.n_max + 1;
  const double delta_p = params.lasers[0].detuning;
  const double delta_c = params.cavity.detuning;

  // --- ion Hamiltonian in the rotating frame ---
  Matrix h_ion = Matrix::Zero(n_ion_levels, n_ion_levels);
  for (int p : kPLevels) h_ion(p, p) = -delta_p;
  for (int d : kDLevels) h_ion(d, d) = delta_c - delta_p;
  for (int i = 0; i < n_ion_levels; ++i)
    h_ion(i, i) += params.ion.zeeman_shifts[static_cast<std::size_t>(i)];

  // --- pump coupling S -> P ---
  const LaserField& pump = params.lasers[0];
  for (int s : kSLevels)
    for (int p : kPLevels) {
      const int two_q = kQn[p].two_m - kQn[s].two_m;
      if (std::abs(two_q) > 2) continue;
      const Complex eps = pump.polarization[static_cast<std::size_t>(two_q / 2 + 1)];
      if (eps == Complex(0.0)) continue;
      const double cgc = cg::clebsch_gordan(1, kQn[s].two_m, 2, two_q, 1, kQn[p].two_m);
      const Complex amp = 0.5 * pump.rabi * eps * cgc;
      h_ion(p, s) += amp;
      h_ion(s, p) += std::conj(amp);
    }

  Matrix h_full = embed(h_ion, hs, 0).mat;

  // --- cavity coupling P <-> D at the local standing-wave amplitude ---
  const double g_local = local_coupling(params.position_from_node(), params.cavity);
  const Matrix a_local = annihilation(nf);
  for (int mode = 0; mode < 2; ++mode) {
    const Matrix a_dag = embed(a_local, hs, 1 + mode).mat.adjoint();
    const Polarization& eps = params.cavity.mode_polarizations[static_cast<std::size_t>(mode)];
    Matrix lower = Matrix::Zero(n_ion_levels, n_ion_levels); // |D><P| weighted
    for (int p : kPLevels)
      for (int d : kDLevels) {
        const int two_q = kQn[d].two_m - kQn[p].two_m;
        if (std::abs(two_q) > 2) continue;
        const Complex e = eps[static_cast<std::size_t>(two_q / 2 + 1)];
        if (e == Complex(0.0)) continue;
        const double cgc = cg::clebsch_gordan(1, kQn[p].two_m, 2, two_q, 3, kQn[d].two_m);
        lower(d, p) += std::conj(e) * cgc;
      }
    const Matrix sig = embed(lower, hs, 0).mat;
    const Matrix term = g_local * (a_dag * sig);
    h_full += term + term.adjoint();
  }

  Operator h{hs, std::move(h_full)};

  // --- collapse channels ---
  std::vector<qdyn::CollapseChannel> channels;

  // P -> S and P -> D spontaneous decay, one channel per photon polarization q;
  // Clebsch-Gordan columns are normalised, so each P level decays at exactly
  // gamma * branching per branch.
  for (int two_q = -2; two_q <= 2; two_q += 2) {
    Matrix to_s = Matrix::Zero(n_ion_levels, n_ion_levels);
    for (int p : kPLevels) {
      const int two_ms = kQn[p].two_m - two_q;
      for (int s : kSLevels)
        if (kQn[s].two_m == two_ms)
          to_s(s, p) = cg::clebsch_gordan(1, two_ms, 2, two_q, 1, kQn[p].two_m);
    }
    if (to_s.cwiseAbs().maxCoeff() > 0.0)
      channels.push_back({embed(to_s, hs, 0), params.ion.gamma * params.ion.branching_s});

    Matrix to_d = Matrix::Zero(n_ion_levels, n_ion_levels);
    for (int p : kPLevels) {
      const int two_md = kQn[p].two_m - two_q;
      for (int d : kDLevels)
        if (kQn[d].two_m == two_md)
          to_d(d, p) = cg::clebsch_gordan(3, two_md, 2, two_q, 1, kQn[p].two_m);
    }
    if (to_d.cwiseAbs().maxCoeff() > 0.0)
      channels.push_back({embed(to_d, hs, 0), params.ion.gamma * params.ion.branching_d});
  }

  // photon loss through the mirrors
  for (int mode = 0; mode < 2; ++mode)
    channels.push_back({embed(a_local, hs, 1 + mode), params.cavity.kappa});

  // effective incoherent repump D -> S (854/850 nm repumpers adiabatically
  // eliminated); each D level recycles at repump_rate total
  if (params.repump_rate > 0.0) {
    for (int d : kDLevels)
      for (int s : kSLevels)
        channels.push_back({embed(ion_ketbra(s, d), hs, 0), 0.5 * params.repump_rate});
  }

  return MasterEquation(std::move(h), std::move(channels));
}

Operator photon_number(const SystemParams& params) {
  const HilbertSpace hs = system_space(params);
  const int nf = params.cavity.n_max + 1;
  Matrix n_local = Matrix::Zero(nf, nf);
  for (int n = 0; n < nf; ++n) n_local(n, n) = n;
  Operator total = embed(n_local, hs, 1);
  total.mat += embed(n_local, hs, 2).mat;
  return total;
}

double emission_rate(const DensityMatrix& rho, const SystemParams& params) {
  return params.cavity.kappa * qdyn::expectation(rho, photon_number(params)).real();
}

DensityMatrix initial_probe_state(const SystemParams& params) {
  const HilbertSpace hs = system_space(params);
  Matrix rho = Matrix::Zero(hs.total(), hs.total());
  const int nf = params.cavity.n_max + 1;
  // ion index varies slowest; vacuum is the (0, 0) mode component
  for (int s : kSLevels) rho(s * nf * nf, s * nf * nf) = 0.5;
  return DensityMatrix{hs, std::move(rho)};
}

double photon_probability(const SystemParams& params, const DensityMatrix& rho0,
                          double duration, double tol) {
  require(duration >= 0.0, "photon_probability: negative duration");
  MasterEquation me = build_system(params);
  require(rho0.space == me.space(), "photon_probability: initial state space mismatch");
  auto res = qdyn::integrate_expectation(rho0, me, duration, {photon_number(params)},
                                         {.tol = tol});
  return params.cavity.kappa * res.integrals[0];
}

double photon_probability(const SystemParams& params, double duration, double tol) {
  return photon_probability(params, initial_probe_state(params), duration, tol);
}

std::vector<ScanPoint> empty_cavity_scan(const std::vector<double>& detunings, double kappa) {
  require(kappa > 0.0, "empty_cavity_scan: kappa must be positive");
  std::vector<ScanPoint> out;
  out.reserve(detunings.size());
  for (double d : detunings) {
    const double u = 2.0 * d / kappa;
    out.push_back({d, 1.0 / (1.0 + u * u)});
  }
  return out;
}

EmissionCurve::EmissionCurve(const SystemParams& params, double duration, int n_samples,
                             double tol) {
  params.validate();
  require(duration > 0.0, "emission curve: duration must be positive");
  require(n_samples >= 5, "emission curve: need at least 5 samples");
  g0_ = params.cavity.g0;
  k_ = params.cavity.wavenumber();
  duration_ = duration;
  if (g0_ == 0.0) return; // decoupled ion: identically zero curve

  std::vector<double> gs(static_cast<std::size_t>(n_samples));
  std::vector<double> ps(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double g = g0_ * i / (n_samples - 1);
    SystemParams p = params;
    p.cavity.g0 = g;
    p.coupling_phase_origin = PhaseOrigin::node;
    p.position = params.cavity.wavelength / 4.0; // evaluate at the antinode
    gs[static_cast<std::size_t>(i)] = g;
    ps[static_cast<std::size_t>(i)] = photon_probability(p, duration, tol);
  }
  curve_ = interp::CubicHermite(std::move(gs), std::move(ps),
                                interp::CubicHermite::Slopes::pchip);
}

double EmissionCurve::at_coupling(double g) const {
  const double ga = std::clamp(std::abs(g), 0.0, g0_);
  if (g0_ == 0.0) return 0.0;
  return curve_(ga);
}

double EmissionCurve::at_position(double x_from_node) const {
  return at_coupling(g0_ * std::sin(k_ * x_from_node));
}

} // namespace icq::model
