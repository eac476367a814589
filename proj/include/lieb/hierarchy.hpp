#pragma once

#include <memory>
#include <vector>

#include "lieb/fock.hpp"
#include "lieb/gmres.hpp"

namespace lieb::hierarchy {

// Exponents of <prod_s (s^dag)^{n_s} prod_s s^{m_s}>.
struct MultiIndex {
  Occupation n{};
  Occupation m{};
  int order() const { return std::max(fock::total(n), fock::total(m)); }
  bool operator==(const MultiIndex&) const = default;
};

// All multi-indices with max(sum n, sum m) <= N_c. Unknowns are grouped into blocks
// (p, q) = (sum n, sum m) in lexicographic (p, q) order; inside a block the position is
// rank_p(n) * T_q + rank_q(m), with ranks from the lexicographic shell ordering.
class HierarchyBasis {
 public:
  explicit HierarchyBasis(int n_c, std::size_t memory_budget = kDefaultMemoryBudget);

  int cutoff() const { return n_c_; }
  std::size_t size() const { return size_; }
  // Number of exponent vectors with sum <= N_c, C(N_c + 6, 6).
  std::size_t vectors_up_to_cutoff() const;

  const fock::SectorBasis& shell(int p) const { return shells_[p]; }
  std::size_t shell_size(int p) const { return shells_[p].size(); }
  std::size_t block_offset(int p, int q) const { return offsets_[p * (n_c_ + 1) + q]; }

  std::ptrdiff_t index_of(const MultiIndex& idx) const;  // -1 when outside the cutoff
  MultiIndex operator[](std::size_t i) const;
  std::size_t conjugate_index(std::size_t i) const;  // position of (m, n)

  // Rough working-set size of a steady-state solve at cutoff n_c.
  static std::size_t estimate_bytes(int n_c);

 private:
  int n_c_;
  std::size_t size_ = 0;
  std::vector<fock::SectorBasis> shells_;
  std::vector<std::size_t> offsets_;  // (n_c + 1)^2 block starts
};

struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<cplx> val;

  void apply(const cplx* x, cplx* y) const;
  void apply_rows(std::size_t first, std::size_t count, const cplx* x, cplx* y) const;
  std::size_t nonzeros() const { return val.size(); }
};

struct EomOptions {
  bool include_interaction_raise = true;  // drop the U coupling to order + 1 when false
};

// dC/dt = A C for the normally ordered moments, truncated at the basis cutoff.
// Per row C(n, m):
//   sum_s [-i Delta_s (n_s - m_s) - gamma/2 (n_s + m_s) + i U/2 (n_s(n_s-1) - m_s(m_s-1))] C
//   + i U sum_s (n_s - m_s) C[n + e_s, m + e_s]
//   - i sum_{(s,r)} J_sr [n_s C[n + e_r - e_s, m] + n_r C[n + e_s - e_r, m]
//                         - m_s C[n, m + e_r - e_s] - m_r C[n, m + e_s - e_r]]
//   + i sum_c (n_c F^* C[n - e_c, m] - m_c F C[n, m - e_c])
// The row of the zero index is identically zero.
class EquationsOfMotion {
 public:
  EquationsOfMotion(const model::ResolvedLattice& lattice, std::shared_ptr<const HierarchyBasis> basis,
                    EomOptions opts = {});

  const HierarchyBasis& basis() const { return *basis_; }
  std::shared_ptr<const HierarchyBasis> basis_ptr() const { return basis_; }
  const model::ResolvedLattice& lattice() const { return lattice_; }
  const CsrMatrix& matrix() const { return a_; }
  // Drive couplings only (to blocks (p-1, q) and (p, q-1)).
  const CsrMatrix& drive_part() const { return drive_; }

  void apply(const linalg::Vector& c, linalg::Vector& out) const;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> to_sparse() const;

 private:
  model::ResolvedLattice lattice_;
  std::shared_ptr<const HierarchyBasis> basis_;
  CsrMatrix a_;
  CsrMatrix drive_;
};

struct CorrelationVector {
  std::shared_ptr<const HierarchyBasis> basis;
  linalg::Vector values;

  cplx value(const MultiIndex& idx) const;
  // max |C(n, m) - conj(C(m, n))|
  double hermitian_asymmetry() const;
};

struct SolveOptions {
  double tolerance = 1e-12;
  int restart = 40;
  int max_iterations = 3000;
  EomOptions eom;
};

struct SolveResult {
  CorrelationVector c;
  double residual = 0.0;  // ||A C|| / ||C||
  int iterations = 0;
};

// Solves A C = 0 with the zero-index row replaced by C_0 = 1, by GMRES preconditioned with
// the exact inverse of the interaction-free-raise part of A (Sylvester solves per block in
// the Fock-sector eigenbases, forward substitution in p + q). Throws SolverError.
SolveResult steady_state_solve(const EquationsOfMotion& eom, const SolveOptions& opts = {});

inline constexpr double kDensityFloor = 1e-12;

struct HierarchyObservables {
  SiteArray density{};
  double n_tot = 0.0;
  double n_b1 = 0.0;
  double n_b2 = 0.0;
  double n_b = 0.0;
  double g2_11 = 0.0;
  double g2_22 = 0.0;
  double g2_12 = 0.0;
  bool n_b_below_floor = false;  // g2 values are not meaningful
  double hermitian_asymmetry = 0.0;
};

// Requires N_c >= 2. g2_ij = <b_i^dag b_j^dag b_j b_i> / (n_bi n_bj).
HierarchyObservables observables(const CorrelationVector& c);

struct PointResult {
  int n_c = 0;
  HierarchyObservables obs;
  double residual = 0.0;
  int iterations = 0;
  // Max relative change of n_b1, n_b2, g2_11, g2_22, g2_12 from N_c to N_c + 1; NaN if not run.
  double convergence_delta = 0.0;
};

PointResult solve_point(const model::ResolvedLattice& lattice, int n_c, bool convergence_check,
                        const SolveOptions& opts = {}, std::size_t memory_budget = kDefaultMemoryBudget);

}  // namespace lieb::hierarchy
