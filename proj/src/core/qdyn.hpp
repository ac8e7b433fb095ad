#pragma once

// Dense master-equation toolbox for small composite systems (dim <= ~64).
//
//   drho/dt = -i [H, rho] + sum_k rate_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})
//
// hbar = 1 throughout; Hamiltonians and rates are angular frequencies (rad/s).
// Public types hold dense Eigen matrices.  The time stepper internally mirrors
// H_eff and the collapse operators as sparse matrices: the operators arising
// here have O(dim) nonzeros, which makes the right-hand side ~50x cheaper than
// dense matmuls without changing any result.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "error.hpp"

namespace icq::qdyn {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct HilbertSpace {
  std::vector<int> dims;

  int total() const {
    int n = 1;
    for (int d : dims) n *= d;
    return n;
  }
  bool operator==(const HilbertSpace&) const = default;

  // throws validation unless every factor dimension is >= 1
  static HilbertSpace make(std::vector<int> dims);
};

Matrix kron(const Matrix& a, const Matrix& b);

struct Operator {
  HilbertSpace space;
  Matrix mat;

  static Operator zero(const HilbertSpace& space);
  static Operator identity(const HilbertSpace& space);
  Operator adjoint() const { return {space, mat.adjoint()}; }
  bool is_hermitian(double tol = 1e-12) const;
};

// Places a dim[slot] x dim[slot] matrix into the composite space, identity on
// all other factors.  Factor 0 is the leftmost (outermost) Kronecker factor.
Operator embed(const Matrix& local, const HilbertSpace& space, int slot);

struct DensityMatrix {
  HilbertSpace space;
  Matrix mat;

  static DensityMatrix pure(const HilbertSpace& space, const Vector& ket);
  static DensityMatrix from_matrix(const HilbertSpace& space, const Matrix& mat);
};

// Throws validation naming the violated invariant (shape, hermiticity,
// unit trace, positivity down to -tol).
void validate_density(const DensityMatrix& rho, double tol = 1e-9);

Complex expectation(const DensityMatrix& rho, const Operator& op);

struct CollapseChannel {
  Operator op;
  double rate; // rad/s, >= 0
};

class MasterEquation {
public:
  // throws validation on mismatched spaces, non-hermitian H, negative rate
  MasterEquation(Operator hamiltonian, std::vector<CollapseChannel> channels);

  const Operator& hamiltonian() const { return h_; }
  const std::vector<CollapseChannel>& channels() const { return channels_; }
  const HilbertSpace& space() const { return h_.space; }
  int dim() const { return h_.mat.rows(); }

  // out = Lindblad generator applied to rho; work buffers must be dim x dim
  void apply(const Matrix& rho, Matrix& out, Matrix& work1, Matrix& work2) const;

private:
  Operator h_;
  std::vector<CollapseChannel> channels_;
  Eigen::SparseMatrix<Complex> h_eff_;                  // H - i/2 sum r L^dag L
  std::vector<Eigen::SparseMatrix<Complex>> ls_;        // sqrt(r) L
  std::vector<Eigen::SparseMatrix<Complex>> ls_adj_;
};

Operator lindblad_derivative(const DensityMatrix& rho, const MasterEquation& me);

struct EvolveOptions {
  double tol = 1e-8;            // relative local-error tolerance
  long max_steps = 50'000'000;  // guard against runaway step rejection
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

// Adaptive Dormand-Prince 5(4) propagation.  sample_times must be ascending
// within [0, duration]; empty means {0, duration}.  Throws numerical on step
// underflow or step-count exhaustion, reporting the time reached.
Trajectory evolve(const DensityMatrix& rho0, const MasterEquation& me, double duration,
                  const EvolveOptions& opts = {}, std::vector<double> sample_times = {});

DensityMatrix evolve_final(const DensityMatrix& rho0, const MasterEquation& me,
                           double duration, const EvolveOptions& opts = {});

// Same tableau with a fixed step; exists so convergence-order studies can
// halve h explicitly.
DensityMatrix evolve_fixed_step(const DensityMatrix& rho0, const MasterEquation& me,
                                double duration, int n_steps);

struct IntegralResult {
  DensityMatrix final_state;
  std::vector<double> integrals; // integral of Re<op_k>(t) dt over [0, duration]
  long accepted_steps = 0;
  long rejected_steps = 0;
};

// Accumulates time integrals of expectation values along the adaptive solution
// using the integrator's own quadrature weights (no trajectory storage).
IntegralResult integrate_expectation(const DensityMatrix& rho0, const MasterEquation& me,
                                     double duration, const std::vector<Operator>& integrands,
                                     const EvolveOptions& opts = {});

// Null vector of the vectorised Liouvillian with unit trace.  Throws numerical
// if the null space is degenerate (message names its dimension) or the
// residual check fails.
DensityMatrix steady_state(const MasterEquation& me);

} // namespace icq::qdyn
