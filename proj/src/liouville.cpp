#include "lieb/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "lieb/gmres.hpp"
#include "lieb/kernels.hpp"

namespace lieb::liouville {

bool Frame::displaced() const {
  return std::any_of(displacement.begin(), displacement.end(), [](cplx a) { return a != cplx{}; });
}

namespace {

fock::Monomial unit_create(std::size_t s) {
  fock::Monomial m;
  m.create[s] = 1;
  return m;
}

fock::Monomial unit_annihilate(std::size_t s) {
  fock::Monomial m;
  m.annihilate[s] = 1;
  return m;
}

}  // namespace

Liouvillian::Liouvillian(const model::ResolvedLattice& lattice, std::shared_ptr<const fock::FockBasis> basis,
                         Frame frame)
    : lattice_(lattice), basis_(std::move(basis)), frame_(frame) {
  if (!basis_) throw InvalidInput("Liouvillian requires a basis");
  terms_ = fock::hamiltonian_terms(lattice_, true);
  if (frame_.displaced()) {
    terms_ = fock::displace(terms_, frame_.displacement);
    // gamma D[alpha + d] = gamma D[d] - i[H', .] with H' = i gamma/2 (alpha^* d - alpha d^dag).
    for (std::size_t s = 0; s < kNumSites; ++s) {
      const cplx a = frame_.displacement[s];
      if (a == cplx{}) continue;
      terms_.push_back({cplx{0.0, 0.5 * lattice_.gamma} * std::conj(a), unit_annihilate(s)});
      terms_.push_back({cplx{0.0, -0.5 * lattice_.gamma} * a, unit_create(s)});
    }
    terms_ = fock::simplify(terms_);
  }
  h_ = fock::to_operator(*basis_, terms_);
  for (std::size_t s = 0; s < kNumSites; ++s) jumps_.push_back(fock::annihilation(static_cast<Site>(s), *basis_));

  const std::size_t d = dim();
  SparseRowOperator g = (cplx{0.0, -1.0} * h_).eval();
  for (std::size_t i = 0; i < d; ++i) g.coeffRef(i, i) += -0.5 * lattice_.gamma * fock::total((*basis_)[i]);
  g.makeCompressed();
  g_row_ptr_.assign(g.outerIndexPtr(), g.outerIndexPtr() + d + 1);
  g_col_.assign(g.innerIndexPtr(), g.innerIndexPtr() + g.nonZeros());
  g_val_.assign(g.valuePtr(), g.valuePtr() + g.nonZeros());

  gathers_.resize(kNumSites);
  for (std::size_t s = 0; s < kNumSites; ++s) {
    auto& gather = gathers_[s];
    for (std::size_t i = 0; i < d; ++i) {
      Occupation raised = (*basis_)[i];
      ++raised[s];
      const auto r = basis_->index_of(raised);
      if (r < 0) continue;
      gather.dst.push_back(static_cast<std::int32_t>(i));
      gather.src.push_back(static_cast<std::int32_t>(r));
      gather.weight.push_back(std::sqrt(static_cast<double>(raised[s])));
    }
  }
}

void Liouvillian::apply(const DenseMatrix& rho, DenseMatrix& out) const {
  const auto& k = kernels::active();
  const std::size_t d = dim();
  out.setZero(d, d);

  // rho G^dag: column l gathers conj(G(l, k)) rho(:, k).
  for (std::size_t l = 0; l < d; ++l) {
    for (auto p = g_row_ptr_[l]; p < g_row_ptr_[l + 1]; ++p) {
      k.caxpy(d, std::conj(g_val_[p]), rho.col(g_col_[p]).data(), out.col(l).data());
    }
  }

  // G rho, accumulated transposed: (G rho)^T = rho^T G^T.
  DenseMatrix rho_t = DenseMatrix::Zero(d, d);
  k.transpose_add(d, rho.data(), rho_t.data());
  DenseMatrix left_t = DenseMatrix::Zero(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (auto p = g_row_ptr_[j]; p < g_row_ptr_[j + 1]; ++p) {
      k.caxpy(d, g_val_[p], rho_t.col(g_col_[p]).data(), left_t.col(j).data());
    }
  }
  rho_t.resize(0, 0);

  // gamma d rho d^dag: out(i, j) += gamma w_i w_j rho(raise(i), raise(j)).
  for (const auto& gather : gathers_) {
    const std::size_t n = gather.dst.size();
    for (std::size_t c = 0; c < n; ++c) {
      k.gather_axpy(n, lattice_.gamma * gather.weight[c], gather.weight.data(), gather.dst.data(),
                    gather.src.data(), rho.col(gather.src[c]).data(), out.col(gather.dst[c]).data());
    }
  }

  k.transpose_add(d, left_t.data(), out.data());
}

DenseMatrix Liouvillian::apply(const DenseMatrix& rho) const {
  DenseMatrix out;
  apply(rho, out);
  return out;
}

std::size_t Liouvillian::sparse_bytes_estimate() const {
  std::size_t nnz = 2 * dim() * g_val_.size();
  for (const auto& gather : gathers_) nnz += gather.dst.size() * gather.dst.size();
  // Triplets during assembly dominate: value + two indices.
  return nnz * (sizeof(cplx) + 2 * sizeof(int)) + nnz * (sizeof(cplx) + sizeof(int));
}

Eigen::SparseMatrix<cplx> Liouvillian::to_sparse(std::size_t memory_budget) const {
  const std::size_t need = sparse_bytes_estimate();
  if (need > memory_budget) {
    std::ostringstream msg;
    msg << "explicit Liouvillian for D=" << dim() << " needs ~" << need / (1 << 20) << " MiB, budget "
        << memory_budget / (1 << 20) << " MiB";
    throw BudgetExceeded(msg.str(), need, memory_budget);
  }
  const auto d = static_cast<int>(dim());
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(2 * dim() * g_val_.size());
  for (int r = 0; r < d; ++r) {
    for (auto p = g_row_ptr_[r]; p < g_row_ptr_[r + 1]; ++p) {
      const int c = g_col_[p];
      const cplx g = g_val_[p];
      for (int j = 0; j < d; ++j) {
        t.emplace_back(r + j * d, c + j * d, g);                // (I (x) G)
        t.emplace_back(j + r * d, j + c * d, std::conj(g));     // (conj(G) (x) I)
      }
    }
  }
  for (const auto& gather : gathers_) {
    const std::size_t n = gather.dst.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        t.emplace_back(gather.dst[a] + gather.dst[b] * d, gather.src[a] + gather.src[b] * d,
                       lattice_.gamma * gather.weight[a] * gather.weight[b]);
      }
    }
  }
  Eigen::SparseMatrix<cplx> out(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(d) * d);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

std::size_t krylov_bytes(std::size_t dim, int restart) {
  // Krylov basis plus r, w, z and the transposition buffers inside apply().
  return static_cast<std::size_t>(restart + 7) * dim * dim * sizeof(cplx);
}

Liouvillian build_liouvillian(const model::ResolvedLattice& lattice, std::shared_ptr<const fock::FockBasis> basis,
                              Frame frame, std::size_t memory_budget) {
  const std::size_t need = krylov_bytes(basis->size(), 2);
  if (need > memory_budget) {
    std::ostringstream msg;
    msg << "Fock basis of dimension " << basis->size() << " needs ~" << need / (1 << 20)
        << " MiB for a steady-state solve, budget " << memory_budget / (1 << 20) << " MiB";
    throw BudgetExceeded(msg.str(), need, memory_budget);
  }
  return Liouvillian(lattice, std::move(basis), frame);
}

// ---------------------------------------------------------------------------
// DensityMatrix

double DensityMatrix::hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double DensityMatrix::max_level_population() const {
  const int cap = basis->n_max();
  double worst = 0.0;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    double p = 0.0;
    for (std::size_t i = 0; i < basis->size(); ++i) {
      if ((*basis)[i][s] == cap) p += rho(i, i).real();
    }
    worst = std::max(worst, p);
  }
  return worst;
}

double DensityMatrix::top_shell_population() const {
  if (!basis->total_max()) return 0.0;
  const auto& sectors = basis->sectors();
  const int top = basis->max_total();
  if (top >= static_cast<int>(sectors.size())) return 0.0;
  double p = 0.0;
  for (auto i : sectors[top]) p += rho(i, i).real();
  return p;
}

namespace {

cplx trace_product(const DenseMatrix& rho, const SparseOperator& op) {
  // tr(rho op) = sum_{col} op(row, col) rho(col, row)
  cplx acc = 0.0;
  for (int c = 0; c < op.outerSize(); ++c) {
    for (SparseOperator::InnerIterator it(op, c); it; ++it) acc += it.value() * rho(it.col(), it.row());
  }
  return acc;
}

}  // namespace

cplx expectation(const DensityMatrix& rho, const fock::Monomial& mono) {
  for (std::size_t s = 0; s < kNumSites; ++s) {
    if (mono.create[s] > rho.basis->n_max() || mono.annihilate[s] > rho.basis->n_max())
      throw InvalidInput("monomial exponent exceeds the Fock cutoff; expectation would be unreliable");
  }
  if (!rho.frame.displaced()) return trace_product(rho.rho, fock::monomial_operator(*rho.basis, mono));
  const auto expanded = fock::displace({{1.0, mono}}, rho.frame.displacement, false);
  cplx acc = 0.0;
  for (const auto& term : expanded) {
    if (term.mono == fock::Monomial{}) {
      acc += term.coeff * rho.trace();
    } else {
      acc += term.coeff * trace_product(rho.rho, fock::monomial_operator(*rho.basis, term.mono));
    }
  }
  return acc;
}

double residual_norm(const Liouvillian& l, const DensityMatrix& rho) {
  const DenseMatrix lr = l.apply(rho.rho);
  return lr.norm() / rho.rho.norm();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.rho.rows() != b.rho.rows()) throw InvalidInput("trace distance needs density matrices on the same basis");
  for (std::size_t s = 0; s < kNumSites; ++s) {
    if (std::abs(a.frame.displacement[s] - b.frame.displacement[s]) > 0.0)
      throw InvalidInput("trace distance needs density matrices in the same frame");
  }
  const DenseMatrix diff = a.rho - b.rho;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double fidelity_with_pure(const DensityMatrix& rho, const Eigen::VectorXcd& psi) {
  return (psi.adjoint() * rho.rho * psi)(0).real();
}

DenseMatrix vacuum(const fock::FockBasis& basis) {
  DenseMatrix rho = DenseMatrix::Zero(basis.size(), basis.size());
  rho(0, 0) = 1.0;
  return rho;
}

// ---------------------------------------------------------------------------
// Preconditioner: exact inverse of L0 = -i[H0, .] + gamma sum_s D[d_s], with H0 the
// photon-number-conserving part of H, under the same trace-row replacement as the full
// system. In the eigenbasis of H0 the commutator and anticommutator parts are diagonal
// and the jump terms lower (N, M) -> (N-1, M-1), so blocks are solved top-down.

namespace {

class SectorPreconditioner {
 public:
  explicit SectorPreconditioner(const Liouvillian& l) : gamma_(l.gamma()) {
    const auto& basis = l.basis();
    const auto& sectors = basis.sectors();
    fock::Polynomial conserving;
    for (const auto& t : l.hamiltonian_terms()) {
      if (t.mono.creation_order() == t.mono.annihilation_order()) conserving.push_back(t);
    }
    const SparseOperator h0 = fock::to_operator(basis, conserving);

    local_.resize(basis.size());
    for (std::size_t n = 0; n < sectors.size(); ++n) {
      for (std::size_t a = 0; a < sectors[n].size(); ++a) local_[sectors[n][a]] = {static_cast<int>(n), a};
    }
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& sec : sectors) blocks.push_back(Eigen::MatrixXd::Zero(sec.size(), sec.size()));
    for (int c = 0; c < h0.outerSize(); ++c) {
      for (SparseOperator::InnerIterator it(h0, c); it; ++it) {
        const auto [nr, ar] = local_[it.row()];
        const auto [nc, ac] = local_[it.col()];
        if (nr != nc) throw SolverError("number-conserving Hamiltonian couples sectors");
        if (std::abs(it.value().imag()) > 1e-12 * (1.0 + std::abs(it.value().real())))
          throw SolverError("sector preconditioner expects a real number-conserving Hamiltonian");
        blocks[nr](ar, ac) = it.value().real();
      }
    }
    for (auto& b : blocks) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
      vectors_.push_back(solver.eigenvectors());
      energies_.push_back(solver.eigenvalues());
    }
    sectors_ = sectors;

    // Jump maps sector N+1 -> N as (local row in N, local row in N+1, weight).
    lowering_.assign(sectors.size(), {});
    for (std::size_t s = 0; s < kNumSites; ++s) {
      for (std::size_t n = 0; n + 1 < sectors.size(); ++n) {
        Lowering low;
        for (std::size_t a = 0; a < sectors[n].size(); ++a) {
          Occupation raised = basis[sectors[n][a]];
          ++raised[s];
          const auto r = basis.index_of(raised);
          if (r < 0) continue;
          low.local.push_back(a);
          low.raised.push_back(local_[r].second);
          low.weight.push_back(std::sqrt(static_cast<double>(raised[s])));
        }
        lowering_[n].push_back(std::move(low));
      }
    }
  }

  void solve(const DenseMatrix& b, DenseMatrix& x) const {
    const int top = static_cast<int>(sectors_.size()) - 1;
    x.setZero(b.rows(), b.cols());
    for (int level = 2 * top; level >= 0; --level) {
      for (int n = std::max(0, level - top); n <= std::min(top, level); ++n) {
        const int m = level - n;
        if (n == 0 && m == 0) continue;
        solve_block(n, m, b, x);
      }
    }
    cplx tr = 0.0;
    for (Eigen::Index i = 1; i < x.rows(); ++i) tr += x(i, i);
    x(0, 0) = b(0, 0) - tr;
  }

 private:
  struct Lowering {
    std::vector<std::size_t> local;
    std::vector<std::size_t> raised;
    std::vector<double> weight;
  };

  void solve_block(int n, int m, const DenseMatrix& b, DenseMatrix& x) const {
    const auto& rows = sectors_[n];
    const auto& cols = sectors_[m];
    const auto dn = static_cast<Eigen::Index>(rows.size());
    const auto dm = static_cast<Eigen::Index>(cols.size());
    if (dn == 0 || dm == 0) return;
    Eigen::MatrixXcd r(dn, dm);
    for (Eigen::Index j = 0; j < dm; ++j) {
      for (Eigen::Index i = 0; i < dn; ++i) r(i, j) = b(rows[i], cols[j]);
    }
    const int top = static_cast<int>(sectors_.size()) - 1;
    if (n < top && m < top) {
      const auto& up_rows = sectors_[n + 1];
      const auto& up_cols = sectors_[m + 1];
      for (std::size_t s = 0; s < kNumSites; ++s) {
        const auto& lr = lowering_[n][s];
        const auto& lc = lowering_[m][s];
        for (std::size_t q = 0; q < lc.local.size(); ++q) {
          const auto xc = up_cols[lc.raised[q]];
          const double wq = gamma_ * lc.weight[q];
          for (std::size_t p = 0; p < lr.local.size(); ++p) {
            r(lr.local[p], lc.local[q]) -= wq * lr.weight[p] * x(up_rows[lr.raised[p]], xc);
          }
        }
      }
    }
    const Eigen::MatrixXd& vn = vectors_[n];
    const Eigen::MatrixXd& vm = vectors_[m];
    const Eigen::MatrixXd yr = vn.transpose() * r.real() * vm;
    const Eigen::MatrixXd yi = vn.transpose() * r.imag() * vm;
    Eigen::MatrixXcd y(dn, dm);
    const double damping = -0.5 * gamma_ * (n + m);
    for (Eigen::Index j = 0; j < dm; ++j) {
      for (Eigen::Index i = 0; i < dn; ++i) {
        const cplx denom{damping, -(energies_[n](i) - energies_[m](j))};
        y(i, j) = cplx{yr(i, j), yi(i, j)} / denom;
      }
    }
    const Eigen::MatrixXd xr = vn * y.real() * vm.transpose();
    const Eigen::MatrixXd xi = vn * y.imag() * vm.transpose();
    for (Eigen::Index j = 0; j < dm; ++j) {
      for (Eigen::Index i = 0; i < dn; ++i) x(rows[i], cols[j]) = cplx{xr(i, j), xi(i, j)};
    }
  }

  double gamma_;
  std::vector<std::pair<int, std::size_t>> local_;
  std::vector<std::vector<std::size_t>> sectors_;
  std::vector<Eigen::MatrixXd> vectors_;
  std::vector<Eigen::VectorXd> energies_;
  std::vector<std::vector<Lowering>> lowering_;  // [sector N][site]
};

Eigen::SparseMatrix<cplx> constrained_sparse(const Liouvillian& l, std::size_t budget) {
  const Eigen::SparseMatrix<cplx> s = l.to_sparse(budget);
  const auto d = static_cast<int>(l.dim());
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(s.nonZeros() + d);
  for (int c = 0; c < s.outerSize(); ++c) {
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(s, c); it; ++it) {
      if (it.row() != 0) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (int i = 0; i < d; ++i) t.emplace_back(0, i + i * d, 1.0);
  Eigen::SparseMatrix<cplx> out(s.rows(), s.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

DensityMatrix finish(const Liouvillian& l, DenseMatrix rho, double& raw_herm) {
  raw_herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  DensityMatrix out{l.basis_ptr(), l.frame(), 0.5 * (rho + rho.adjoint())};
  out.rho /= out.rho.trace().real();
  return out;
}

}  // namespace

SteadyStateResult steady_state_direct(const Liouvillian& l, const SteadyStateOptions& opts) {
  const std::size_t d = l.dim();
  SteadyStateResult result;
  DenseMatrix rho;

  if (opts.method == SteadyStateMethod::SparseLU) {
    const Eigen::SparseMatrix<cplx> m = constrained_sparse(l, opts.memory_budget);
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw SolverError("constrained Liouvillian is singular: " + lu.lastErrorMessage());
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(m.rows());
    b(0) = 1.0;
    const Eigen::VectorXcd x = lu.solve(b);
    rho = Eigen::Map<const DenseMatrix>(x.data(), d, d);
  } else {
    int restart = opts.restart;
    while (restart > 2 && krylov_bytes(d, restart) > opts.memory_budget) --restart;
    if (krylov_bytes(d, restart) > opts.memory_budget) {
      throw BudgetExceeded("Krylov workspace exceeds the memory budget", krylov_bytes(d, restart),
                           opts.memory_budget);
    }
    const SectorPreconditioner precond(l);
    const auto dd = static_cast<Eigen::Index>(d);
    linalg::LinearOp apply_m = [&](const linalg::Vector& in, linalg::Vector& out) {
      out.resize(in.size());
      Eigen::Map<const DenseMatrix> x(in.data(), dd, dd);
      DenseMatrix y;
      l.apply(x, y);
      y(0, 0) = x.trace();
      Eigen::Map<DenseMatrix>(out.data(), dd, dd) = y;
    };
    linalg::LinearOp apply_p = [&](const linalg::Vector& in, linalg::Vector& out) {
      out.resize(in.size());
      Eigen::Map<const DenseMatrix> x(in.data(), dd, dd);
      DenseMatrix y;
      precond.solve(x, y);
      Eigen::Map<DenseMatrix>(out.data(), dd, dd) = y;
    };
    linalg::Vector b = linalg::Vector::Zero(dd * dd);
    b(0) = 1.0;
    linalg::Vector x;
    apply_p(b, x);
    const auto gm = linalg::gmres(apply_m, apply_p, b, x, {opts.tolerance, restart, opts.max_iterations});
    result.iterations = gm.iterations;
    if (!gm.converged && gm.relative_residual > 1e-8) {
      std::ostringstream msg;
      msg << "Krylov steady-state solve stalled at relative residual " << gm.relative_residual << " after "
          << gm.iterations << " iterations";
      throw SolverError(msg.str());
    }
    rho = Eigen::Map<const DenseMatrix>(x.data(), dd, dd);
  }

  result.state = finish(l, std::move(rho), result.raw_hermiticity_error);
  result.residual = residual_norm(l, result.state);
  return result;
}

double constrained_min_singular_value(const Liouvillian& l, int iterations) {
  const Eigen::SparseMatrix<cplx> m = constrained_sparse(l, kDefaultMemoryBudget);
  const Eigen::SparseMatrix<cplx> mh = m.adjoint();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> luh;
  lu.compute(m);
  luh.compute(mh);
  if (lu.info() != Eigen::Success || luh.info() != Eigen::Success) return 0.0;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(m.rows());
  for (auto& z : v) z = {normal(rng), normal(rng)};
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXcd w = luh.solve(lu.solve(v));  // (M^H M)^{-1} v
    lambda = w.norm();
    v = w / lambda;
  }
  return 1.0 / std::sqrt(lambda);
}

EvolutionResult steady_state_by_evolution(const Liouvillian& l, const DenseMatrix& rho0, const EvolutionOptions& opts) {
  const auto& k = kernels::active();
  const std::size_t n = rho0.size();
  EvolutionResult result;

  double dt = opts.dt;
  if (dt <= 0.0) {
    // Power iteration for the spectral radius of L.
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    DenseMatrix v(rho0.rows(), rho0.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = {normal(rng), normal(rng)};
    v /= v.norm();
    double radius = 1.0;
    DenseMatrix w;
    for (int it = 0; it < 30; ++it) {
      l.apply(v, w);
      radius = w.norm();
      v = w / radius;
    }
    dt = 2.0 / (1.2 * radius);
  }

  DenseMatrix k1, k2, k3, k4, tmp;
  auto rk4 = [&](const DenseMatrix& y, double h, DenseMatrix& out) {
    l.apply(y, k1);
    tmp = y + 0.5 * h * k1;
    l.apply(tmp, k2);
    tmp = y + 0.5 * h * k2;
    l.apply(tmp, k3);
    tmp = y + h * k3;
    l.apply(tmp, k4);
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  // Step-halving check from the initial state.
  for (int attempt = 0; attempt < 12; ++attempt) {
    DenseMatrix full, half;
    rk4(rho0, dt, full);
    rk4(rho0, 0.5 * dt, half);
    rk4(half, 0.5 * dt, half);
    if ((full - half).norm() <= 1e-3 * std::max(1.0, rho0.norm()) && std::isfinite(full.norm())) break;
    dt *= 0.5;
  }
  result.dt = dt;

  DenseMatrix rho = rho0;
  DenseMatrix next;
  double t = 0.0;
  double best = std::numeric_limits<double>::infinity();
  while (t < opts.t_max) {
    rk4(rho, dt, next);
    // k1 = L(rho) at the start of the step.
    const double res = std::sqrt(k.cnorm2(n, k1.data())) / rho.norm();
    best = std::min(best, res);
    result.residual = res;
    if (res < opts.tolerance) {
      result.converged = true;
      break;
    }
    rho.swap(next);
    t += dt;
  }
  result.t_reached = t;
  DensityMatrix state{l.basis_ptr(), l.frame(), 0.5 * (rho + rho.adjoint())};
  state.rho /= state.rho.trace().real();
  result.state = std::move(state);
  if (!result.converged) result.residual = residual_norm(l, result.state);
  return result;
}

OracleObservables observables(const DensityMatrix& rho) {
  OracleObservables o;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    o.density[s] = expectation(rho, fock::number_operator(static_cast<Site>(s))).real();
    o.n_tot += o.density[s];
  }
  const double nb1 = o.density[index(Site::B1)];
  const double nb2 = o.density[index(Site::B2)];
  o.n_b = 0.5 * (nb1 + nb2);
  if (rho.basis->n_max() >= 2) {
    o.g2_11 = expectation(rho, fock::pair_number_operator(Site::B1, Site::B1)).real() / (nb1 * nb1);
    o.g2_22 = expectation(rho, fock::pair_number_operator(Site::B2, Site::B2)).real() / (nb2 * nb2);
  } else {
    o.g2_11 = o.g2_22 = std::numeric_limits<double>::quiet_NaN();
  }
  o.g2_12 = expectation(rho, fock::pair_number_operator(Site::B1, Site::B2)).real() / (nb1 * nb2);
  o.max_level_population = rho.truncation_population();
  return o;
}

}  // namespace lieb::liouville
