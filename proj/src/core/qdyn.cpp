#include "qdyn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace icq::qdyn {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

double maxnorm(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::SparseMatrix<Complex> sparsify(const Matrix& m) {
  Eigen::SparseMatrix<Complex> s(m.rows(), m.cols());
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      if (m(i, j) != Complex(0.0, 0.0)) trips.emplace_back(i, j, m(i, j));
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

} // namespace

HilbertSpace HilbertSpace::make(std::vector<int> dims) {
  require(!dims.empty(), "HilbertSpace: no factors given");
  for (int d : dims)
    require(d >= 1, "HilbertSpace: factor dimension " + std::to_string(d) + " < 1");
  return HilbertSpace{std::move(dims)};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Operator Operator::zero(const HilbertSpace& space) {
  return {space, Matrix::Zero(space.total(), space.total())};
}

Operator Operator::identity(const HilbertSpace& space) {
  return {space, Matrix::Identity(space.total(), space.total())};
}

bool Operator::is_hermitian(double tol) const {
  const double scale = std::max(1.0, maxnorm(mat));
  return maxnorm(mat - mat.adjoint()) <= tol * scale;
}

Operator embed(const Matrix& local, const HilbertSpace& space, int slot) {
  require(slot >= 0 && slot < static_cast<int>(space.dims.size()),
          "embed: slot " + std::to_string(slot) + " out of range for " +
              std::to_string(space.dims.size()) + " factors");
  const int d = space.dims[static_cast<std::size_t>(slot)];
  require(local.rows() == d && local.cols() == d,
          "embed: operator is " + std::to_string(local.rows()) + "x" +
              std::to_string(local.cols()) + " but factor " + std::to_string(slot) +
              " has dimension " + std::to_string(d));
  Matrix acc = Matrix::Identity(1, 1);
  for (int f = 0; f < static_cast<int>(space.dims.size()); ++f) {
    const int df = space.dims[static_cast<std::size_t>(f)];
    if (f == slot)
      acc = kron(acc, local);
    else
      acc = kron(acc, Matrix::Identity(df, df));
  }
  return {space, std::move(acc)};
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, const Vector& ket) {
  require(ket.size() == space.total(), "pure state: ket length " + std::to_string(ket.size()) +
                                           " != dimension " + std::to_string(space.total()));
  const double n2 = ket.squaredNorm();
  require(n2 > 0.0, "pure state: zero ket");
  return {space, (ket * ket.adjoint()) / n2};
}

DensityMatrix DensityMatrix::from_matrix(const HilbertSpace& space, const Matrix& mat) {
  DensityMatrix rho{space, mat};
  validate_density(rho);
  return rho;
}

void validate_density(const DensityMatrix& rho, double tol) {
  const int n = rho.space.total();
  require(rho.mat.rows() == n && rho.mat.cols() == n,
          "density matrix: shape " + std::to_string(rho.mat.rows()) + "x" +
              std::to_string(rho.mat.cols()) + " does not match dimension " + std::to_string(n));
  const double herm = maxnorm(rho.mat - rho.mat.adjoint());
  require(herm <= tol, "density matrix: not hermitian, max asymmetry " + fmt(herm));
  const double tr_err = std::abs(rho.mat.trace() - Complex(1.0, 0.0));
  require(tr_err <= tol, "density matrix: trace deviates from 1 by " + fmt(tr_err));
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho.mat + rho.mat.adjoint()),
                                           Eigen::EigenvaluesOnly);
  const double lam_min = es.eigenvalues().minCoeff();
  require(lam_min >= -tol, "density matrix: negative eigenvalue " + fmt(lam_min));
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  require(rho.space == op.space, "expectation: operator and state live on different spaces");
  return (op.mat.transpose().cwiseProduct(rho.mat)).sum(); // tr(O rho)
}

MasterEquation::MasterEquation(Operator hamiltonian, std::vector<CollapseChannel> channels)
    : h_(std::move(hamiltonian)), channels_(std::move(channels)) {
  const int n = h_.space.total();
  require(h_.mat.rows() == n && h_.mat.cols() == n, "master equation: Hamiltonian shape mismatch");
  require(h_.is_hermitian(1e-12), "master equation: Hamiltonian is not hermitian");
  Matrix heff = h_.mat;
  for (const auto& ch : channels_) {
    require(ch.op.space == h_.space,
            "master equation: collapse operator lives on a different space");
    require(ch.rate >= 0.0, "master equation: negative rate " + fmt(ch.rate));
    heff.noalias() += Complex(0.0, -0.5) * ch.rate * (ch.op.mat.adjoint() * ch.op.mat);
    if (ch.rate > 0.0) {
      Matrix scaled = std::sqrt(ch.rate) * ch.op.mat;
      ls_.push_back(sparsify(scaled));
      ls_adj_.push_back(sparsify(scaled.adjoint()));
    }
  }
  h_eff_ = sparsify(heff);
}

void MasterEquation::apply(const Matrix& rho, Matrix& out, Matrix& work1, Matrix& work2) const {
  // -i (H_eff rho - rho H_eff^dag) + sum_k Ls_k rho Ls_k^dag, valid because the
  // stage states stay hermitian, so rho H_eff^dag = (H_eff rho)^dag.
  work1.noalias() = h_eff_ * rho;
  out = Complex(0.0, -1.0) * (work1 - work1.adjoint());
  for (std::size_t k = 0; k < ls_.size(); ++k) {
    work1.noalias() = ls_[k] * rho;
    work2.noalias() = work1 * ls_adj_[k];
    out += work2;
  }
}

Operator lindblad_derivative(const DensityMatrix& rho, const MasterEquation& me) {
  require(rho.space == me.space(), "lindblad_derivative: state and equation spaces differ");
  const int n = me.dim();
  Matrix out(n, n), w1(n, n), w2(n, n);
  Matrix sym = 0.5 * (rho.mat + rho.mat.adjoint());
  me.apply(sym, out, w1, w2);
  return {rho.space, std::move(out)};
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
// b - b^ (5th minus embedded 4th order); index 7 is the FSAL stage
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

struct StepperState {
  Matrix y;
  Matrix k1, k2, k3, k4, k5, k6, k7;
  Matrix ytmp, err, w1, w2;
  explicit StepperState(int n)
      : y(n, n), k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n),
        ytmp(n, n), err(n, n), w1(n, n), w2(n, n) {}
};

// One proposed step of size h from s.y with s.k1 = rhs(s.y).  Leaves the
// candidate state in s.ytmp, the embedded error difference in s.err, and
// k7 = rhs(candidate) ready for FSAL reuse.
void dp5_stages(const MasterEquation& me, StepperState& s, double h) {
  s.ytmp = s.y + h * A21 * s.k1;
  me.apply(s.ytmp, s.k2, s.w1, s.w2);
  s.ytmp = s.y + h * (A31 * s.k1 + A32 * s.k2);
  me.apply(s.ytmp, s.k3, s.w1, s.w2);
  s.ytmp = s.y + h * (A41 * s.k1 + A42 * s.k2 + A43 * s.k3);
  me.apply(s.ytmp, s.k4, s.w1, s.w2);
  s.ytmp = s.y + h * (A51 * s.k1 + A52 * s.k2 + A53 * s.k3 + A54 * s.k4);
  me.apply(s.ytmp, s.k5, s.w1, s.w2);
  s.ytmp = s.y + h * (A61 * s.k1 + A62 * s.k2 + A63 * s.k3 + A64 * s.k4 + A65 * s.k5);
  me.apply(s.ytmp, s.k6, s.w1, s.w2);
  s.ytmp = s.y + h * (B1 * s.k1 + B3 * s.k3 + B4 * s.k4 + B5 * s.k5 + B6 * s.k6);
  me.apply(s.ytmp, s.k7, s.w1, s.w2);
  s.err = h * (E1 * s.k1 + E3 * s.k3 + E4 * s.k4 + E5 * s.k5 + E6 * s.k6 + E7 * s.k7);
}

// Time integrals of tr(O y(t)) ride along on the solver stages.  tr(O .) is
// linear, so the stage values follow from traces of the k's alone:
//   phi_i = tr(O y) + h sum_j a_ij tr(O k_j),  I += h sum_i b_i phi_i
// which is the usual augmented-variable quadrature at 5th order.
struct StageObserver {
  std::vector<const Matrix*> ops;
  std::vector<double> integrals;

  explicit StageObserver(const std::vector<Operator>& integrands) {
    for (const auto& o : integrands) ops.push_back(&o.mat);
    integrals.assign(ops.size(), 0.0);
  }
  static double trace_of(const Matrix& op, const Matrix& y) {
    return (op.transpose().cwiseProduct(y)).sum().real();
  }
  void accumulate(const StepperState& s, double h) {
    for (std::size_t m = 0; m < ops.size(); ++m) {
      const Matrix& o = *ops[m];
      const double p0 = trace_of(o, s.y);
      const double t1 = trace_of(o, s.k1);
      const double t2 = trace_of(o, s.k2);
      const double t3 = trace_of(o, s.k3);
      const double t4 = trace_of(o, s.k4);
      const double t5 = trace_of(o, s.k5);
      const double phi1 = p0;
      const double phi3 = p0 + h * (A31 * t1 + A32 * t2);
      const double phi4 = p0 + h * (A41 * t1 + A42 * t2 + A43 * t3);
      const double phi5 = p0 + h * (A51 * t1 + A52 * t2 + A53 * t3 + A54 * t4);
      const double phi6 = p0 + h * (A61 * t1 + A62 * t2 + A63 * t3 + A64 * t4 + A65 * t5);
      integrals[m] += h * (B1 * phi1 + B3 * phi3 + B4 * phi4 + B5 * phi5 + B6 * phi6);
    }
  }
};

double initial_step(const StepperState& s, double duration) {
  const double d0 = maxnorm(s.y);
  const double d1 = maxnorm(s.k1);
  const double h = (d1 > 1e-300) ? 0.01 * std::max(d0, 1e-3) / d1 : duration;
  return std::min(h, duration);
}

struct DriveResult {
  long accepted = 0;
  long rejected = 0;
};

// Core adaptive loop.  on_sample(t) sees s.y holding the state at each
// requested sample time (caller passes them ascending).
template <typename SampleFn>
DriveResult dp5_drive(const MasterEquation& me, StepperState& s, double duration,
                      const EvolveOptions& opts, const std::vector<double>& sample_times,
                      StageObserver* observer, SampleFn&& on_sample) {
  DriveResult res;
  double t = 0.0;
  std::size_t next_sample = 0;
  auto emit_through = [&](double tcur) {
    while (next_sample < sample_times.size() &&
           sample_times[next_sample] <= tcur + duration * 1e-14) {
      on_sample(sample_times[next_sample]);
      ++next_sample;
    }
  };
  emit_through(0.0);

  me.apply(s.y, s.k1, s.w1, s.w2);
  double h = initial_step(s, duration);
  long steps = 0;

  while (t < duration * (1.0 - 1e-14)) {
    if (++steps > opts.max_steps)
      throw_numerical("evolve: step budget exhausted at t = " + fmt(t) + " s");
    h = std::min(h, duration - t);
    if (next_sample < sample_times.size() && sample_times[next_sample] > t)
      h = std::min(h, sample_times[next_sample] - t);
    if (h < duration * 1e-15)
      throw_numerical("evolve: step size underflow at t = " + fmt(t) + " s");

    dp5_stages(me, s, h);

    const double err = maxnorm(s.err);
    const double sc = opts.tol * std::max({1.0, maxnorm(s.y), maxnorm(s.ytmp)});
    const double ratio = (sc > 0.0) ? err / sc : 0.0;

    if (ratio <= 1.0) {
      if (observer) observer->accumulate(s, h);
      t += h;
      s.y = s.ytmp;
      s.y = 0.5 * (s.y + s.y.adjoint().eval()); // keep hermitian to roundoff
      s.k1 = s.k7;                              // FSAL
      ++res.accepted;
      emit_through(t);
      h *= std::clamp(0.9 * std::pow(std::max(ratio, 1e-10), -0.2), 0.2, 5.0);
    } else {
      ++res.rejected;
      h *= std::clamp(0.9 * std::pow(ratio, -0.2), 0.1, 0.9);
    }
  }
  emit_through(duration);
  return res;
}

} // namespace

Trajectory evolve(const DensityMatrix& rho0, const MasterEquation& me, double duration,
                  const EvolveOptions& opts, std::vector<double> sample_times) {
  require(rho0.space == me.space(), "evolve: state and equation spaces differ");
  require(duration >= 0.0, "evolve: negative duration");
  require(opts.tol > 0.0, "evolve: tolerance must be positive");

  Trajectory traj;
  if (duration == 0.0) {
    if (sample_times.empty()) sample_times = {0.0};
    for (double ts : sample_times) {
      require(std::abs(ts) == 0.0, "evolve: sample time outside [0, duration]");
      traj.times.push_back(ts);
      traj.states.push_back({rho0.space, 0.5 * (rho0.mat + rho0.mat.adjoint())});
    }
    return traj;
  }

  if (sample_times.empty()) sample_times = {0.0, duration};
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    require(sample_times[i] >= 0.0 && sample_times[i] <= duration * (1.0 + 1e-12),
            "evolve: sample time outside [0, duration]");
    if (i > 0)
      require(sample_times[i] > sample_times[i - 1], "evolve: sample times must be ascending");
  }

  const int n = me.dim();
  StepperState s(n);
  s.y = 0.5 * (rho0.mat + rho0.mat.adjoint());
  dp5_drive(me, s, duration, opts, sample_times, nullptr, [&](double ts) {
    traj.times.push_back(ts);
    traj.states.push_back({rho0.space, s.y});
  });
  return traj;
}

DensityMatrix evolve_final(const DensityMatrix& rho0, const MasterEquation& me, double duration,
                           const EvolveOptions& opts) {
  Trajectory t = evolve(rho0, me, duration, opts, {duration});
  return std::move(t.states.back());
}

DensityMatrix evolve_fixed_step(const DensityMatrix& rho0, const MasterEquation& me,
                                double duration, int n_steps) {
  require(rho0.space == me.space(), "evolve_fixed_step: state and equation spaces differ");
  require(n_steps > 0, "evolve_fixed_step: need at least one step");
  require(duration > 0.0, "evolve_fixed_step: duration must be positive");
  StepperState s(me.dim());
  s.y = 0.5 * (rho0.mat + rho0.mat.adjoint());
  const double h = duration / n_steps;
  me.apply(s.y, s.k1, s.w1, s.w2);
  for (int i = 0; i < n_steps; ++i) {
    dp5_stages(me, s, h);
    s.y = s.ytmp;
    s.k1 = s.k7;
  }
  return {rho0.space, 0.5 * (s.y + s.y.adjoint().eval())};
}

IntegralResult integrate_expectation(const DensityMatrix& rho0, const MasterEquation& me,
                                     double duration, const std::vector<Operator>& integrands,
                                     const EvolveOptions& opts) {
  require(rho0.space == me.space(), "integrate_expectation: state and equation spaces differ");
  require(duration >= 0.0, "integrate_expectation: negative duration");
  require(opts.tol > 0.0, "integrate_expectation: tolerance must be positive");
  for (const auto& op : integrands)
    require(op.space == me.space(), "integrate_expectation: integrand space mismatch");

  IntegralResult out;
  if (duration == 0.0) {
    out.final_state = {rho0.space, 0.5 * (rho0.mat + rho0.mat.adjoint())};
    out.integrals.assign(integrands.size(), 0.0);
    return out;
  }

  StepperState s(me.dim());
  s.y = 0.5 * (rho0.mat + rho0.mat.adjoint());
  StageObserver obs(integrands);
  DriveResult res = dp5_drive(me, s, duration, opts, {}, &obs, [](double) {});
  out.final_state = {rho0.space, s.y};
  out.integrals = std::move(obs.integrals);
  out.accepted_steps = res.accepted;
  out.rejected_steps = res.rejected;
  return out;
}

namespace {

Matrix build_liouvillian(const MasterEquation& me) {
  const int n = me.dim();
  const Matrix idn = Matrix::Identity(n, n);
  const Matrix& h = me.hamiltonian().mat;
  // column-major vec: vec(A rho B) = (B^T kron A) vec(rho)
  Matrix liou = Complex(0.0, -1.0) * (kron(idn, h) - kron(h.transpose(), idn));
  for (const auto& ch : me.channels()) {
    if (ch.rate == 0.0) continue;
    const Matrix& l = ch.op.mat;
    const Matrix ldl = l.adjoint() * l;
    liou.noalias() += ch.rate * kron(l.conjugate(), l);
    liou.noalias() -= 0.5 * ch.rate * (kron(idn, ldl) + kron(ldl.transpose(), idn));
  }
  return liou;
}

int liouvillian_nullity(const Matrix& liou) {
  Eigen::FullPivLU<Matrix> lu(liou);
  lu.setThreshold(1e-10);
  return static_cast<int>(liou.rows()) - static_cast<int>(lu.rank());
}

} // namespace

DensityMatrix steady_state(const MasterEquation& me) {
  const int n = me.dim();
  const int n2 = n * n;
  Matrix liou = build_liouvillian(me);
  const double opscale = std::max(maxnorm(liou), 1e-300);

  // Full-pivot rank probes are costly, so run them up front only where cheap;
  // large systems get diagnosed lazily if the solve fails.
  if (n2 <= 256) {
    const int nullity = liouvillian_nullity(liou);
    if (nullity > 1)
      throw_numerical("steady_state: Liouvillian null space has dimension " +
                      std::to_string(nullity) + ", steady state is not unique");
  }

  // replace the row of one diagonal element by the trace constraint, solve
  const double resid_tol = 1e-10;
  double best_resid = -1.0;
  for (int diag = 0; diag < n; ++diag) {
    const int row = diag * n + diag; // vec index of (diag, diag)
    Matrix mod = liou / opscale;
    mod.row(row).setZero();
    for (int i = 0; i < n; ++i) mod(row, i * n + i) = 1.0;
    Vector rhs = Vector::Zero(n2);
    rhs(row) = 1.0;
    Vector x = Eigen::PartialPivLU<Matrix>(mod).solve(rhs);
    if (!x.allFinite()) continue;

    Matrix rho = Eigen::Map<Matrix>(x.data(), n, n);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const Complex tr = rho.trace();
    if (std::abs(tr) < 1e-300) continue;
    rho /= tr;

    Matrix deriv(n, n), w1(n, n), w2(n, n);
    me.apply(rho, deriv, w1, w2);
    const double resid = maxnorm(deriv) / (opscale * std::max(maxnorm(rho), 1e-300));
    if (best_resid < 0.0 || resid < best_resid) best_resid = resid;
    if (resid <= resid_tol) return {me.hamiltonian().space, std::move(rho)};
  }

  if (n2 > 256) {
    const int nullity = liouvillian_nullity(liou);
    if (nullity > 1)
      throw_numerical("steady_state: Liouvillian null space has dimension " +
                      std::to_string(nullity) + ", steady state is not unique");
  }
  throw_numerical("steady_state: residual " + fmt(best_resid) + " exceeds tolerance " +
                  fmt(resid_tol) + " for every pivot row");
}

} // namespace icq::qdyn
