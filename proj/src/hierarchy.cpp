#include "lieb/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lieb/kernels.hpp"

namespace lieb::hierarchy {

namespace {

std::size_t binomial(int n, int k) {
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

constexpr std::size_t kRowsPerUnknown = 36;  // upper bound on non-zeros per row

}  // namespace

std::size_t HierarchyBasis::estimate_bytes(int n_c) {
  const std::size_t t = binomial(n_c + 6, 6);
  const std::size_t n = t * t;
  const std::size_t matrix = n * kRowsPerUnknown * (sizeof(cplx) + sizeof(std::int32_t));
  const std::size_t krylov = n * 48 * sizeof(cplx);
  return matrix + krylov;
}

HierarchyBasis::HierarchyBasis(int n_c, std::size_t memory_budget) : n_c_(n_c) {
  if (n_c < 1) throw InvalidInput("hierarchy cutoff must be >= 1");
  if (n_c > 12) throw InvalidInput("hierarchy cutoff above 12 is not supported");
  const std::size_t need = estimate_bytes(n_c);
  if (need > memory_budget) {
    std::ostringstream msg;
    msg << "hierarchy cutoff N_c=" << n_c << " needs ~" << need / (1 << 20) << " MiB, budget "
        << memory_budget / (1 << 20) << " MiB";
    throw BudgetExceeded(msg.str(), need, memory_budget);
  }
  for (int p = 0; p <= n_c; ++p) shells_.emplace_back(p);
  offsets_.resize((n_c + 1) * (n_c + 1));
  for (int p = 0; p <= n_c; ++p) {
    for (int q = 0; q <= n_c; ++q) {
      offsets_[p * (n_c + 1) + q] = size_;
      size_ += shells_[p].size() * shells_[q].size();
    }
  }
}

std::size_t HierarchyBasis::vectors_up_to_cutoff() const { return binomial(n_c_ + 6, 6); }

std::ptrdiff_t HierarchyBasis::index_of(const MultiIndex& idx) const {
  const int p = fock::total(idx.n);
  const int q = fock::total(idx.m);
  if (p > n_c_ || q > n_c_) return -1;
  const auto a = shells_[p].index_of(idx.n);
  const auto b = shells_[q].index_of(idx.m);
  return static_cast<std::ptrdiff_t>(block_offset(p, q) + a * shells_[q].size() + b);
}

MultiIndex HierarchyBasis::operator[](std::size_t i) const {
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
  // Skip back over empty blocks (none exist, every shell is non-empty).
  const auto block = static_cast<int>(std::distance(offsets_.begin(), it)) - 1;
  const int p = block / (n_c_ + 1);
  const int q = block % (n_c_ + 1);
  const std::size_t local = i - offsets_[block];
  const std::size_t tq = shells_[q].size();
  return {shells_[p][local / tq], shells_[q][local % tq]};
}

std::size_t HierarchyBasis::conjugate_index(std::size_t i) const {
  const MultiIndex idx = (*this)[i];
  return static_cast<std::size_t>(index_of({idx.m, idx.n}));
}

void CsrMatrix::apply(const cplx* x, cplx* y) const {
  kernels::active().csr_matvec(rows, row_ptr.data(), col.data(), val.data(), x, y);
}

void CsrMatrix::apply_rows(std::size_t first, std::size_t count, const cplx* x, cplx* y) const {
  kernels::active().csr_matvec(count, row_ptr.data() + first, col.data(), val.data(), x, y);
}

// ---------------------------------------------------------------------------

EquationsOfMotion::EquationsOfMotion(const model::ResolvedLattice& lattice,
                                     std::shared_ptr<const HierarchyBasis> basis, EomOptions opts)
    : lattice_(lattice), basis_(std::move(basis)) {
  if (!basis_) throw InvalidInput("equations of motion require a basis");
  const auto& hb = *basis_;
  const int nc = hb.cutoff();
  const auto& graph = model::build_lattice();
  const cplx i1{0.0, 1.0};
  const double u = lattice_.u;
  const bool raise = opts.include_interaction_raise && u != 0.0;

  a_.rows = drive_.rows = hb.size();
  a_.row_ptr.reserve(hb.size() + 1);
  drive_.row_ptr.reserve(hb.size() + 1);
  a_.row_ptr.push_back(0);
  drive_.row_ptr.push_back(0);

  std::vector<std::pair<std::int32_t, cplx>> row;
  std::vector<std::pair<std::int32_t, cplx>> drive_row;
  auto push = [&](std::vector<std::pair<std::int32_t, cplx>>& dst, const MultiIndex& idx, cplx coeff) {
    const auto c = hb.index_of(idx);
    if (c >= 0 && coeff != cplx{}) dst.emplace_back(static_cast<std::int32_t>(c), coeff);
  };

  for (int p = 0; p <= nc; ++p) {
    const auto& shell_p = hb.shell(p);
    for (int q = 0; q <= nc; ++q) {
      const auto& shell_q = hb.shell(q);
      for (std::size_t a = 0; a < shell_p.size(); ++a) {
        for (std::size_t b = 0; b < shell_q.size(); ++b) {
          row.clear();
          drive_row.clear();
          const Occupation& n = shell_p[a];
          const Occupation& m = shell_q[b];
          if (p > 0 || q > 0) {
            cplx diag = 0.0;
            for (std::size_t s = 0; s < kNumSites; ++s) {
              const double ns = n[s];
              const double ms = m[s];
              diag += cplx{-0.5 * lattice_.gamma * (ns + ms),
                           -lattice_.detuning[s] * (ns - ms) + 0.5 * u * (ns * (ns - 1) - ms * (ms - 1))};
            }
            row.emplace_back(static_cast<std::int32_t>(hb.block_offset(p, q) + a * shell_q.size() + b), diag);

            if (raise) {
              for (std::size_t s = 0; s < kNumSites; ++s) {
                if (n[s] == m[s]) continue;
                MultiIndex up{n, m};
                ++up.n[s];
                ++up.m[s];
                push(row, up, i1 * u * static_cast<double>(int{n[s]} - int{m[s]}));
              }
            }

            for (std::size_t e = 0; e < kNumEdges; ++e) {
              const double j = lattice_.hopping[e];
              if (j == 0.0) continue;
              const auto s = index(graph.edges[e].first);
              const auto r = index(graph.edges[e].second);
              auto hop = [&](const Occupation& v, std::size_t from, std::size_t to) {
                Occupation w = v;
                --w[from];
                ++w[to];
                return w;
              };
              if (n[s] > 0) push(row, {hop(n, s, r), m}, -i1 * j * double(n[s]));
              if (n[r] > 0) push(row, {hop(n, r, s), m}, -i1 * j * double(n[r]));
              if (m[s] > 0) push(row, {n, hop(m, s, r)}, i1 * j * double(m[s]));
              if (m[r] > 0) push(row, {n, hop(m, r, s)}, i1 * j * double(m[r]));
            }

            for (std::size_t c = 0; c < kNumSites; ++c) {
              const cplx f = lattice_.drive[c];
              if (f == cplx{}) continue;
              if (n[c] > 0) {
                MultiIndex low{n, m};
                --low.n[c];
                push(drive_row, low, i1 * double(n[c]) * std::conj(f));
              }
              if (m[c] > 0) {
                MultiIndex low{n, m};
                --low.m[c];
                push(drive_row, low, -i1 * double(m[c]) * f);
              }
            }
          }
          row.insert(row.end(), drive_row.begin(), drive_row.end());
          std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
          std::sort(drive_row.begin(), drive_row.end(),
                    [](const auto& x, const auto& y) { return x.first < y.first; });
          for (const auto& [c, v] : row) {
            a_.col.push_back(c);
            a_.val.push_back(v);
          }
          for (const auto& [c, v] : drive_row) {
            drive_.col.push_back(c);
            drive_.val.push_back(v);
          }
          a_.row_ptr.push_back(static_cast<std::int64_t>(a_.val.size()));
          drive_.row_ptr.push_back(static_cast<std::int64_t>(drive_.val.size()));
        }
      }
    }
  }
}

void EquationsOfMotion::apply(const linalg::Vector& c, linalg::Vector& out) const {
  out.resize(c.size());
  a_.apply(c.data(), out.data());
}

Eigen::SparseMatrix<cplx, Eigen::RowMajor> EquationsOfMotion::to_sparse() const {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(a_.nonzeros());
  for (std::size_t r = 0; r < a_.rows; ++r) {
    for (auto k = a_.row_ptr[r]; k < a_.row_ptr[r + 1]; ++k) t.emplace_back(static_cast<int>(r), a_.col[k], a_.val[k]);
  }
  const auto n = static_cast<Eigen::Index>(a_.rows);
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

// ---------------------------------------------------------------------------

cplx CorrelationVector::value(const MultiIndex& idx) const {
  const auto i = basis->index_of(idx);
  if (i < 0) return 0.0;
  return values(i);
}

double CorrelationVector::hermitian_asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < basis->size(); ++i) {
    worst = std::max(worst, std::abs(values(i) - std::conj(values(basis->conjugate_index(i)))));
  }
  return worst;
}

namespace {

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class BlockPreconditioner {
 public:
  explicit BlockPreconditioner(const EquationsOfMotion& eom) : eom_(eom), gamma_(eom.lattice().gamma) {
    const auto& hb = eom.basis();
    for (int p = 0; p <= hb.cutoff(); ++p) {
      const auto& shell = hb.shell(p);
      const SparseOperator h = fock::hamiltonian(eom.lattice(), shell, false);
      Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(shell.size(), shell.size());
      for (int c = 0; c < h.outerSize(); ++c) {
        for (SparseOperator::InnerIterator it(h, c); it; ++it) {
          if (std::abs(it.value().imag()) > 1e-12 * (1.0 + std::abs(it.value().real())))
            throw SolverError("block preconditioner expects a real sector Hamiltonian");
          dense(it.row(), it.col()) = it.value().real();
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
      vectors_.push_back(solver.eigenvectors());
      energies_.push_back(solver.eigenvalues());
      Eigen::VectorXd w(shell.size());
      for (std::size_t a = 0; a < shell.size(); ++a) {
        double prod = 1.0;
        for (auto k : shell[a]) prod *= std::tgamma(k + 1.0);
        w(a) = std::sqrt(prod);
      }
      weights_.push_back(w);
    }
  }

  void solve(const linalg::Vector& r, linalg::Vector& x) const {
    const auto& hb = eom_.basis();
    const int nc = hb.cutoff();
    x.setZero(r.size());
    x(0) = r(0);
    linalg::Vector rhs;
    for (int level = 1; level <= 2 * nc; ++level) {
      for (int p = std::max(0, level - nc); p <= std::min(nc, level); ++p) {
        const int q = level - p;
        const auto tp = static_cast<Eigen::Index>(hb.shell_size(p));
        const auto tq = static_cast<Eigen::Index>(hb.shell_size(q));
        const std::size_t off = hb.block_offset(p, q);
        rhs.resize(tp * tq);
        eom_.drive_part().apply_rows(off, tp * tq, x.data(), rhs.data());
        rhs = r.segment(off, tp * tq) - rhs;

        Eigen::Map<const RowMatrix> rm(rhs.data(), tp, tq);
        const Eigen::MatrixXd& qp = vectors_[p];
        const Eigen::MatrixXd& qq = vectors_[q];
        const Eigen::VectorXd wp_inv = weights_[p].cwiseInverse();
        const Eigen::VectorXd wq_inv = weights_[q].cwiseInverse();
        const Eigen::MatrixXd zr = wp_inv.asDiagonal() * rm.real() * wq_inv.asDiagonal();
        const Eigen::MatrixXd zi = wp_inv.asDiagonal() * rm.imag() * wq_inv.asDiagonal();
        Eigen::MatrixXd yr = qp.transpose() * zr * qq;
        Eigen::MatrixXd yi = qp.transpose() * zi * qq;
        const double damping = -0.5 * gamma_ * level;
        for (Eigen::Index j = 0; j < tq; ++j) {
          for (Eigen::Index i = 0; i < tp; ++i) {
            const cplx y = cplx{yr(i, j), yi(i, j)} / cplx{damping, energies_[p](i) - energies_[q](j)};
            yr(i, j) = y.real();
            yi(i, j) = y.imag();
          }
        }
        const Eigen::MatrixXd xr = weights_[p].asDiagonal() * (qp * yr * qq.transpose()) * weights_[q].asDiagonal();
        const Eigen::MatrixXd xi = weights_[p].asDiagonal() * (qp * yi * qq.transpose()) * weights_[q].asDiagonal();
        Eigen::Map<RowMatrix> xm(x.data() + off, tp, tq);
        xm.real() = xr;
        xm.imag() = xi;
      }
    }
  }

 private:
  const EquationsOfMotion& eom_;
  double gamma_;
  std::vector<Eigen::MatrixXd> vectors_;
  std::vector<Eigen::VectorXd> energies_;
  std::vector<Eigen::VectorXd> weights_;
};

std::string describe(const model::ResolvedLattice& l, int n_c) {
  std::ostringstream s;
  s << "N_c=" << n_c << " Delta=" << l.detuning[0] << " U=" << l.u << " J=" << l.hopping[0] << " F=" << l.drive[2];
  return s.str();
}

}  // namespace

SolveResult steady_state_solve(const EquationsOfMotion& eom, const SolveOptions& opts) {
  const auto& hb = eom.basis();
  const auto n = static_cast<Eigen::Index>(hb.size());
  const BlockPreconditioner precond(eom);

  linalg::LinearOp apply_m = [&](const linalg::Vector& in, linalg::Vector& out) {
    eom.apply(in, out);
    out(0) = in(0);
  };
  linalg::LinearOp apply_p = [&](const linalg::Vector& in, linalg::Vector& out) { precond.solve(in, out); };

  linalg::Vector b = linalg::Vector::Zero(n);
  b(0) = 1.0;
  linalg::Vector x;
  apply_p(b, x);
  const auto gm = linalg::gmres(apply_m, apply_p, b, x, {opts.tolerance, opts.restart, opts.max_iterations, true});

  SolveResult result;
  result.iterations = gm.iterations;
  linalg::Vector ax;
  eom.apply(x, ax);
  result.residual = ax.norm() / x.norm();
  if (!std::isfinite(result.residual) || result.residual > 1e-9) {
    std::ostringstream msg;
    msg << "hierarchy steady state did not converge (" << describe(eom.lattice(), hb.cutoff())
        << "): residual " << result.residual << " after " << gm.iterations << " iterations";
    throw SolverError(msg.str());
  }
  result.c = {eom.basis_ptr(), std::move(x)};
  return result;
}

HierarchyObservables observables(const CorrelationVector& c) {
  if (c.basis->cutoff() < 2) throw InvalidInput("g2 observables need N_c >= 2");
  HierarchyObservables o;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    MultiIndex idx;
    idx.n[s] = idx.m[s] = 1;
    o.density[s] = c.value(idx).real();
    o.n_tot += o.density[s];
  }
  const auto b1 = index(Site::B1);
  const auto b2 = index(Site::B2);
  o.n_b1 = o.density[b1];
  o.n_b2 = o.density[b2];
  o.n_b = 0.5 * (o.n_b1 + o.n_b2);
  auto pair = [&](std::size_t i, std::size_t j) {
    MultiIndex idx;
    ++idx.n[i];
    ++idx.n[j];
    idx.m = idx.n;
    return c.value(idx).real();
  };
  o.g2_11 = pair(b1, b1) / (o.n_b1 * o.n_b1);
  o.g2_22 = pair(b2, b2) / (o.n_b2 * o.n_b2);
  o.g2_12 = pair(b1, b2) / (o.n_b1 * o.n_b2);
  o.n_b_below_floor = std::min(o.n_b1, o.n_b2) < kDensityFloor;
  o.hermitian_asymmetry = c.hermitian_asymmetry();
  return o;
}

PointResult solve_point(const model::ResolvedLattice& lattice, int n_c, bool convergence_check,
                        const SolveOptions& opts, std::size_t memory_budget) {
  auto run = [&](int cutoff, PointResult& out) {
    auto basis = std::make_shared<const HierarchyBasis>(cutoff, memory_budget);
    const EquationsOfMotion eom(lattice, basis, opts.eom);
    const auto solved = steady_state_solve(eom, opts);
    out.n_c = cutoff;
    out.obs = observables(solved.c);
    out.residual = solved.residual;
    out.iterations = solved.iterations;
  };
  PointResult result;
  run(n_c, result);
  result.convergence_delta = std::numeric_limits<double>::quiet_NaN();
  if (convergence_check) {
    PointResult next;
    run(n_c + 1, next);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), kDensityFloor); };
    result.convergence_delta = std::max({rel(result.obs.n_b1, next.obs.n_b1), rel(result.obs.n_b2, next.obs.n_b2),
                                         rel(result.obs.g2_11, next.obs.g2_11), rel(result.obs.g2_22, next.obs.g2_22),
                                         rel(result.obs.g2_12, next.obs.g2_12)});
  }
  return result;
}

}  // namespace lieb::hierarchy
