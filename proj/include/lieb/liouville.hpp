#pragma once

#include <memory>
#include <optional>

#include "lieb/fock.hpp"

namespace lieb::liouville {

// Coherent displacement of the truncated Fock space: the solver works with
// fluctuation operators d_s = s - alpha_s. alpha = 0 is the plain Fock truncation.
// The displaced master equation is exact before truncation.
struct Frame {
  SiteArrayC displacement{};
  bool displaced() const;
};

using DenseMatrix = Eigen::MatrixXcd;

// Vectorized Lindblad generator L(rho) = i[rho, H] + gamma sum_s D[s] rho on a
// truncated Fock basis. Column-stacking convention, vec(rho)[i + D j] = rho(i, j).
class Liouvillian {
 public:
  Liouvillian(const model::ResolvedLattice& lattice, std::shared_ptr<const fock::FockBasis> basis, Frame frame = {});

  std::size_t dim() const { return basis_->size(); }
  const fock::FockBasis& basis() const { return *basis_; }
  std::shared_ptr<const fock::FockBasis> basis_ptr() const { return basis_; }
  const Frame& frame() const { return frame_; }
  const model::ResolvedLattice& lattice() const { return lattice_; }
  double gamma() const { return lattice_.gamma; }

  const fock::Polynomial& hamiltonian_terms() const { return terms_; }
  const SparseOperator& hamiltonian() const { return h_; }
  const std::vector<SparseOperator>& jumps() const { return jumps_; }

  // Matrix-free action; out is resized. Safe to call concurrently.
  void apply(const DenseMatrix& rho, DenseMatrix& out) const;
  DenseMatrix apply(const DenseMatrix& rho) const;

  // Explicit D^2 x D^2 superoperator. Throws BudgetExceeded when it would not fit.
  Eigen::SparseMatrix<cplx> to_sparse(std::size_t memory_budget = kDefaultMemoryBudget) const;
  std::size_t sparse_bytes_estimate() const;

 private:
  struct JumpGather {
    std::vector<std::int32_t> dst;  // row i with a raised partner
    std::vector<std::int32_t> src;  // raise(i)
    std::vector<double> weight;     // sqrt(n_s(i) + 1)
  };

  model::ResolvedLattice lattice_;
  std::shared_ptr<const fock::FockBasis> basis_;
  Frame frame_;
  fock::Polynomial terms_;
  SparseOperator h_;
  std::vector<SparseOperator> jumps_;
  // G = -iH - gamma/2 N in CSR form; L(rho) = G rho + rho G^dag + gamma sum_s d_s rho d_s^dag.
  std::vector<std::int64_t> g_row_ptr_;
  std::vector<std::int32_t> g_col_;
  std::vector<cplx> g_val_;
  std::vector<JumpGather> gathers_;
};

// Bytes needed by the matrix-free Krylov solve with `restart` basis vectors.
std::size_t krylov_bytes(std::size_t dim, int restart);

Liouvillian build_liouvillian(const model::ResolvedLattice& lattice, std::shared_ptr<const fock::FockBasis> basis,
                              Frame frame = {}, std::size_t memory_budget = kDefaultMemoryBudget);

struct DensityMatrix {
  std::shared_ptr<const fock::FockBasis> basis;
  Frame frame;
  DenseMatrix rho;

  cplx trace() const { return rho.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  // max_s P(n_s = n_max) in the working frame (0 if no state reaches the per-site cap).
  double max_level_population() const;
  // P(sum n = total_max) when a total cap is set, otherwise 0.
  double top_shell_population() const;
  double truncation_population() const { return std::max(max_level_population(), top_shell_population()); }
};

// Expectation of a normally ordered monomial of the physical operators. In a displaced
// frame the monomial is re-expanded around alpha. Throws InvalidInput when an exponent
// exceeds the per-site cutoff.
cplx expectation(const DensityMatrix& rho, const fock::Monomial& mono);

double residual_norm(const Liouvillian& l, const DensityMatrix& rho);  // ||L rho||_F / ||rho||_F
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double fidelity_with_pure(const DensityMatrix& rho, const Eigen::VectorXcd& psi);

enum class SteadyStateMethod { Krylov, SparseLU };

struct SteadyStateOptions {
  SteadyStateMethod method = SteadyStateMethod::Krylov;
  double tolerance = 1e-11;  // relative residual of the constrained system
  int restart = 30;          // reduced automatically to fit the budget
  int max_iterations = 3000;
  std::size_t memory_budget = kDefaultMemoryBudget;
};

struct SteadyStateResult {
  DensityMatrix state;
  double residual = 0.0;  // ||L rho|| / ||rho||
  int iterations = 0;
  double raw_hermiticity_error = 0.0;
};

// Solves L rho = 0 with the (vacuum, vacuum) row replaced by tr(rho) = 1. Krylov uses
// restarted GMRES preconditioned by the exact inverse of the number-conserving part of L
// (applied by back substitution over photon-number sectors); SparseLU factorizes the
// explicit constrained superoperator. Throws SolverError on failure.
SteadyStateResult steady_state_direct(const Liouvillian& l, const SteadyStateOptions& opts = {});

// Smallest singular value of the constrained superoperator, via inverse power iteration
// on the sparse LU factors. A value bounded away from zero certifies a unique steady state.
double constrained_min_singular_value(const Liouvillian& l, int iterations = 60);

struct EvolutionOptions {
  double dt = 0.0;  // 0 selects a step from a spectral-radius estimate
  double t_max = 200.0;
  double tolerance = 1e-10;  // on ||L rho||_F / ||rho||_F
  int check_every = 10;
};

struct EvolutionResult {
  DensityMatrix state;
  bool converged = false;
  double t_reached = 0.0;
  double residual = 0.0;
  double dt = 0.0;
};

// Fixed-step RK4 integration of d rho / dt = L rho until the residual drops below tolerance.
// The step is validated by step halving over the first step. Returns the last iterate and a
// flag when t_max is reached first.
EvolutionResult steady_state_by_evolution(const Liouvillian& l, const DenseMatrix& rho0,
                                          const EvolutionOptions& opts = {});
DenseMatrix vacuum(const fock::FockBasis& basis);

struct OracleObservables {
  SiteArray density{};
  double n_tot = 0.0;
  double n_b = 0.0;
  double g2_11 = 0.0;
  double g2_22 = 0.0;
  double g2_12 = 0.0;
  double max_level_population = 0.0;
  double residual = 0.0;
};

OracleObservables observables(const DensityMatrix& rho);

}  // namespace lieb::liouville
