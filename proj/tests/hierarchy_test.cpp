#include <doctest.h>

#include <cmath>
#include <random>

#include "lieb/hierarchy.hpp"
#include "lieb/liouville.hpp"
#include "lieb/singleparticle.hpp"

using namespace lieb;
using namespace lieb::hierarchy;

namespace {

std::shared_ptr<const HierarchyBasis> make_basis(int n_c) { return std::make_shared<const HierarchyBasis>(n_c); }

model::ResolvedLattice generic_lattice() {
  model::ModelParams p;
  p.delta = 0.35;
  p.u = 0.7;
  p.f = {0.4, -0.3};
  model::DisorderRealization d;
  d.w_freq = 0.8;
  d.w_hop = 0.6;
  d.site_shifts = {0.1, -0.3, 0.25, 0.4, -0.45, 0.05};
  d.edge_shifts = {0.3, -0.2, 0.1, -0.4, 0.45, -0.05};
  return model::resolve(p, d);
}

SiteArrayC linear_amplitudes(const model::ResolvedLattice& lattice) {
  const auto h1 = singleparticle::single_particle_hamiltonian(lattice, singleparticle::Frame::Rotating);
  singleparticle::Vector6c f;
  for (std::size_t s = 0; s < kNumSites; ++s) f(s) = lattice.drive[s];
  const singleparticle::Vector6c a =
      (h1 - cplx(0.0, 0.5 * lattice.gamma) * singleparticle::Matrix6c::Identity()).partialPivLu().solve(-f);
  SiteArrayC out{};
  for (std::size_t s = 0; s < kNumSites; ++s) out[s] = a(s);
  return out;
}

MultiIndex mi(std::initializer_list<int> n, std::initializer_list<int> m) {
  MultiIndex idx;
  std::size_t s = 0;
  for (int x : n) idx.n[s++] = static_cast<std::uint8_t>(x);
  s = 0;
  for (int x : m) idx.m[s++] = static_cast<std::uint8_t>(x);
  return idx;
}

cplx entry(const CsrMatrix& a, std::size_t row, std::size_t col) {
  cplx v{};
  for (auto k = a.row_ptr[row]; k < a.row_ptr[row + 1]; ++k) {
    if (static_cast<std::size_t>(a.col[k]) == col) v += a.val[k];
  }
  return v;
}

}  // namespace

TEST_CASE("basis sizes and indexing") {
  CHECK(HierarchyBasis(1).size() == 49);
  CHECK(HierarchyBasis(2).size() == 784);
  CHECK(HierarchyBasis(3).size() == 7056);
  CHECK(HierarchyBasis(4).vectors_up_to_cutoff() == 210);

  const HierarchyBasis b(3);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const MultiIndex idx = b[i];
    CHECK(b.index_of(idx) == static_cast<std::ptrdiff_t>(i));
    const MultiIndex conj = b[b.conjugate_index(i)];
    CHECK(conj.n == idx.m);
    CHECK(conj.m == idx.n);
  }
  CHECK(b.index_of(mi({4, 0, 0, 0, 0, 0}, {})) == -1);
  CHECK(b[0] == MultiIndex{});
  CHECK(b.block_offset(0, 1) == 1);
  CHECK(b.block_offset(1, 0) == 1 + 6 + 21 + 56);

  CHECK_THROWS_AS(HierarchyBasis(0), InvalidInput);
  CHECK_THROWS_AS(HierarchyBasis(13), InvalidInput);
  CHECK_THROWS_AS(HierarchyBasis(8, 1 << 20), BudgetExceeded);
}

TEST_CASE("equations of motion equal moments of the Lindblad generator") {
  // rho supported on at most two photons: every moment above order 2 vanishes, so the
  // N_c = 3 truncation and the Fock truncation at total 4 are both exact.
  const auto lattice = generic_lattice();
  auto fb = std::make_shared<const fock::FockBasis>(4, 4);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  liouville::DenseMatrix a = liouville::DenseMatrix::Zero(fb->size(), fb->size());
  for (std::size_t i = 0; i < fb->size(); ++i) {
    if (fock::total((*fb)[i]) > 2) continue;
    for (std::size_t j = 0; j < fb->size(); ++j) {
      if (fock::total((*fb)[j]) <= 2) a(i, j) = {g(rng), g(rng)};
    }
  }
  liouville::DenseMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  const liouville::Liouvillian l(lattice, fb);
  const liouville::DenseMatrix lrho = l.apply(rho);

  const auto basis = make_basis(3);
  const EquationsOfMotion eom(lattice, basis);
  linalg::Vector c(basis->size()), dc(basis->size());
  for (std::size_t i = 0; i < basis->size(); ++i) {
    const MultiIndex idx = (*basis)[i];
    const liouville::DenseMatrix op = liouville::DenseMatrix(fock::monomial_operator(*fb, {idx.n, idx.m}));
    c(i) = (rho * op).trace();
    dc(i) = (lrho * op).trace();
  }
  linalg::Vector ac;
  eom.apply(c, ac);
  CHECK((ac - dc).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(c.cwiseAbs().maxCoeff() > 0.1);
  CHECK(dc.cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("anchor row for <b1>") {
  auto p = model::ModelParams{};
  p.delta = 0.6;
  const auto lattice = model::resolve(p);
  const auto basis = make_basis(3);
  const EquationsOfMotion eom(lattice, basis);
  const cplx i{0.0, 1.0};
  const std::size_t row = basis->index_of(mi({}, {0, 1, 0, 0, 0, 0}));
  CHECK(entry(eom.matrix(), row, row) == i * 0.6 - 0.5);
  CHECK(entry(eom.matrix(), row, basis->index_of(mi({0, 1, 0, 0, 0, 0}, {0, 2, 0, 0, 0, 0}))) == -i * 0.1);
  for (auto r : {Site::A1, Site::C1, Site::A2}) {
    MultiIndex nb;
    nb.m[index(r)] = 1;
    CHECK(entry(eom.matrix(), row, basis->index_of(nb)) == i * 3.0);
  }
  const auto nnz = eom.matrix().row_ptr[row + 1] - eom.matrix().row_ptr[row];
  CHECK(nnz == 5);
  CHECK(eom.matrix().row_ptr[1] == 0);  // zero-index row is empty
}

TEST_CASE("hermitian symmetry is closed under the equations of motion") {
  const auto basis = make_basis(3);
  const EquationsOfMotion eom(generic_lattice(), basis);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  linalg::Vector c(basis->size());
  for (std::size_t i = 0; i < basis->size(); ++i) c(i) = {g(rng), g(rng)};
  for (std::size_t i = 0; i < basis->size(); ++i) {
    const auto k = basis->conjugate_index(i);
    if (k == i) c(i) = c(i).real();
    if (k > i) c(k) = std::conj(c(i));
  }
  linalg::Vector out;
  eom.apply(c, out);
  double worst = 0.0;
  for (std::size_t i = 0; i < basis->size(); ++i) {
    worst = std::max(worst, std::abs(out(i) - std::conj(out(basis->conjugate_index(i)))));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("order triangularity at U = 0") {
  auto lattice = generic_lattice();
  lattice.u = 0.0;
  const auto basis = make_basis(4);
  const EquationsOfMotion eom(lattice, basis);
  const auto& a = eom.matrix();
  std::size_t violations = 0;
  for (std::size_t r = 0; r < a.rows; ++r) {
    const int order = (*basis)[r].order();
    for (auto k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) violations += (*basis)[a.col[k]].order() > order;
  }
  CHECK(violations == 0);

  // With U > 0 the only order-raising entries are the interaction couplings.
  const EquationsOfMotion full(generic_lattice(), basis);
  const EquationsOfMotion no_raise(generic_lattice(), basis, EomOptions{false});
  std::size_t raising = 0;
  for (std::size_t r = 0; r < full.matrix().rows; ++r) {
    const int order = (*basis)[r].order();
    for (auto k = full.matrix().row_ptr[r]; k < full.matrix().row_ptr[r + 1]; ++k) {
      raising += (*basis)[full.matrix().col[k]].order() > order;
    }
    for (auto k = no_raise.matrix().row_ptr[r]; k < no_raise.matrix().row_ptr[r + 1]; ++k) {
      CHECK((*basis)[no_raise.matrix().col[k]].order() <= order);
    }
  }
  CHECK(raising > 0);
}

TEST_CASE("U = 0 solution is the coherent product") {
  model::ModelParams p;
  p.u = 0.0;
  p.delta = -0.4;
  p.f = {0.5, 0.2};
  const auto lattice = model::resolve(p);
  const SiteArrayC alpha = linear_amplitudes(lattice);
  const EquationsOfMotion eom(lattice, make_basis(3));
  const auto res = steady_state_solve(eom);
  CHECK(res.iterations <= 2);
  for (std::size_t s = 0; s < kNumSites; ++s) {
    MultiIndex first;
    first.m[s] = 1;
    CHECK(std::abs(res.c.value(first) - alpha[s]) < 1e-10);
  }
  // Every moment factorizes.
  for (std::size_t i = 0; i < res.c.basis->size(); ++i) {
    const MultiIndex idx = (*res.c.basis)[i];
    cplx expected = 1.0;
    for (std::size_t s = 0; s < kNumSites; ++s) {
      expected *= std::pow(std::conj(alpha[s]), int(idx.n[s])) * std::pow(alpha[s], int(idx.m[s]));
    }
    CHECK(std::abs(res.c.values(i) - expected) < 1e-10);
  }
  const auto obs = observables(res.c);
  CHECK(obs.g2_11 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(obs.g2_22 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(obs.g2_12 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("undriven steady state is the vacuum") {
  model::ModelParams p;
  p.f = 0.0;
  const auto res = steady_state_solve(EquationsOfMotion(model::resolve(p), make_basis(3)));
  CHECK(res.c.values(0) == cplx(1.0));
  CHECK(res.c.values.tail(res.c.values.size() - 1).cwiseAbs().maxCoeff() < 1e-14);
  const auto obs = observables(res.c);
  CHECK(obs.n_b_below_floor);
}

TEST_CASE("default operating point") {
  const auto lattice = model::resolve(model::ModelParams{});
  const auto pt = solve_point(lattice, 3, true);
  CHECK(pt.residual < 1e-9);
  CHECK(pt.obs.hermitian_asymmetry < 1e-10);
  CHECK(pt.obs.n_b1 == doctest::Approx(pt.obs.n_b2).epsilon(1e-9));
  CHECK(pt.obs.g2_11 == doctest::Approx(pt.obs.g2_22).epsilon(1e-9));
  CHECK(pt.obs.g2_11 > 10.0);
  CHECK(pt.obs.g2_12 > 1.0);
  CHECK(pt.obs.n_b / pt.obs.n_tot < 1e-2);
  CHECK(std::isfinite(pt.convergence_delta));
  CHECK(pt.convergence_delta < 0.05);
  CHECK(std::isnan(solve_point(lattice, 2, false).convergence_delta));
}

TEST_CASE("observables need a second-order cutoff") {
  const auto res = steady_state_solve(EquationsOfMotion(model::resolve(model::ModelParams{}), make_basis(1)));
  CHECK_THROWS_AS(observables(res.c), InvalidInput);
}

TEST_CASE("matrix-vector products agree with the sparse export") {
  const auto basis = make_basis(3);
  const EquationsOfMotion eom(generic_lattice(), basis);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  linalg::Vector c(basis->size());
  for (auto& x : c) x = {g(rng), g(rng)};
  linalg::Vector out;
  eom.apply(c, out);
  const linalg::Vector ref = eom.to_sparse() * c;
  CHECK((out - ref).norm() < 1e-12 * ref.norm());
}
