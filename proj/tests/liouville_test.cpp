#include <doctest.h>

#include <cmath>
#include <random>

#include "lieb/liouville.hpp"
#include "lieb/singleparticle.hpp"

using namespace lieb;
using namespace lieb::liouville;

namespace {

std::shared_ptr<const fock::FockBasis> basis(int n_max, std::optional<int> cap = std::nullopt) {
  return std::make_shared<const fock::FockBasis>(n_max, cap);
}

DenseMatrix random_density(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  DenseMatrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = {g(rng), g(rng)};
  DenseMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

// Independent U = 0 solution: (H1 - i gamma/2) alpha = -F with H1 the rotating-frame hopping matrix.
SiteArrayC linear_amplitudes(const model::ResolvedLattice& lattice) {
  const auto h1 = singleparticle::single_particle_hamiltonian(lattice, singleparticle::Frame::Rotating);
  singleparticle::Vector6c f;
  for (std::size_t s = 0; s < kNumSites; ++s) f(s) = lattice.drive[s];
  const singleparticle::Matrix6c m =
      h1 - cplx(0.0, 0.5 * lattice.gamma) * singleparticle::Matrix6c::Identity();
  const singleparticle::Vector6c a = m.partialPivLu().solve(-f);
  SiteArrayC out{};
  for (std::size_t s = 0; s < kNumSites; ++s) out[s] = a(s);
  return out;
}

// Truncated product coherent state with amplitudes beta on the given basis.
Eigen::VectorXcd coherent_product(const fock::FockBasis& b, const SiteArrayC& beta) {
  Eigen::VectorXcd psi(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    cplx amp = 1.0;
    for (std::size_t s = 0; s < kNumSites; ++s) {
      const int n = b[i][s];
      amp *= std::exp(-0.5 * std::norm(beta[s])) * std::pow(beta[s], n) / std::sqrt(std::tgamma(n + 1.0));
    }
    psi(i) = amp;
  }
  return psi;
}

model::ResolvedLattice default_lattice() { return model::resolve(model::ModelParams{}); }

}  // namespace

TEST_CASE("trace and hermiticity preservation on random states") {
  std::mt19937_64 rng(2024);
  const auto lattice = default_lattice();
  for (auto b : {basis(2, 2), basis(3, 4)}) {
    const Liouvillian l(lattice, b);
    for (int k = 0; k < 20; ++k) {
      const DenseMatrix rho = random_density(b->size(), rng);
      const DenseMatrix lr = l.apply(rho);
      CHECK(std::abs(lr.trace()) < 1e-10);
      CHECK((lr - lr.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  // Displaced frames keep the generator trace preserving.
  Frame frame;
  for (std::size_t s = 0; s < kNumSites; ++s) frame.displacement[s] = cplx(0.2 * s, -0.1);
  const auto b = basis(3, 3);
  const Liouvillian l(lattice, b, frame);
  for (int k = 0; k < 20; ++k) CHECK(std::abs(l.apply(random_density(b->size(), rng)).trace()) < 1e-10);
}

TEST_CASE("matrix-free action equals the explicit superoperator") {
  std::mt19937_64 rng(3);
  model::ModelParams p;
  p.f = {0.4, 0.3};
  p.delta = -0.7;
  Frame frame;
  frame.displacement[2] = {0.3, 0.1};
  for (const Frame& fr : {Frame{}, frame}) {
    const Liouvillian l(model::resolve(p), basis(2, 3), fr);
    const auto sparse = l.to_sparse();
    const auto d = static_cast<Eigen::Index>(l.dim());
    for (int k = 0; k < 3; ++k) {
      const DenseMatrix rho = random_density(l.dim(), rng);
      const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), d * d);
      const Eigen::VectorXcd out = sparse * v;
      const DenseMatrix ref = Eigen::Map<const DenseMatrix>(out.data(), d, d);
      CHECK((l.apply(rho) - ref).norm() < 1e-12 * (1.0 + ref.norm()));
    }
  }
}

TEST_CASE("Liouvillian against a dense commutator construction") {
  std::mt19937_64 rng(9);
  model::ModelParams p;
  p.delta = 0.3;
  const auto lattice = model::resolve(p);
  const auto b = basis(2, 2);
  const Liouvillian l(lattice, b);
  const DenseMatrix h = DenseMatrix(fock::hamiltonian(lattice, *b, true));
  const DenseMatrix rho = random_density(b->size(), rng);
  const cplx i{0.0, 1.0};
  DenseMatrix ref = -i * (h * rho - rho * h);
  for (std::size_t s = 0; s < kNumSites; ++s) {
    const DenseMatrix a = DenseMatrix(fock::annihilation(static_cast<Site>(s), *b));
    ref += a * rho * a.adjoint() - 0.5 * (a.adjoint() * a * rho + rho * a.adjoint() * a);
  }
  CHECK((l.apply(rho) - ref).norm() < 1e-12);
}

TEST_CASE("undriven steady state is the vacuum") {
  model::ModelParams p;
  p.f = 0.0;
  const Liouvillian l(model::resolve(p), basis(2, 3));
  const auto res = steady_state_direct(l);
  const DensityMatrix vac{l.basis_ptr(), {}, vacuum(l.basis())};
  CHECK(trace_distance(res.state, vac) < 1e-10);
  CHECK(res.residual < 1e-10);
}

TEST_CASE("single driven linear cavity is a coherent state") {
  model::ModelParams p;
  p.j = 0.0;
  p.u = 0.0;
  p.delta = 1.0;
  p.f = {0.2, 0.1};
  const auto lattice = model::resolve(p);
  const auto b = basis(6, 6);
  const Liouvillian l(lattice, b);
  const auto res = steady_state_direct(l);
  const cplx alpha = p.f / cplx(p.delta, 0.5 * p.gamma);
  const fock::Monomial c1{{}, {0, 0, 1, 0, 0, 0}};
  CHECK(std::abs(expectation(res.state, c1) - alpha) < 1e-6);
  const auto obs = observables(res.state);
  CHECK(obs.density[index(Site::C1)] == doctest::Approx(std::norm(alpha)).epsilon(1e-6));
  CHECK(obs.density[index(Site::B1)] < 1e-14);

  SiteArrayC beta{};
  beta[index(Site::C1)] = alpha;
  beta[index(Site::C2)] = alpha;
  CHECK(fidelity_with_pure(res.state, coherent_product(*b, beta)) > 1.0 - 1e-6);
}

TEST_CASE("U = 0 lattice steady state is a coherent product") {
  model::ModelParams p;
  p.u = 0.0;
  const auto lattice = model::resolve(p);
  const SiteArrayC alpha = linear_amplitudes(lattice);

  // Expand around a deliberately wrong amplitude so the solver has work to do.
  Frame frame;
  SiteArrayC beta{};
  for (std::size_t s = 0; s < kNumSites; ++s) {
    frame.displacement[s] = 0.9 * alpha[s];
    beta[s] = alpha[s] - frame.displacement[s];
  }
  // Dark-site g2 divides by n_b^2 ~ 1e-6, so the cutoff has to be generous.
  const auto b = basis(4, 5);
  const Liouvillian l(lattice, b, frame);
  const auto res = steady_state_direct(l);
  CHECK(res.residual < 1e-9);
  CHECK(fidelity_with_pure(res.state, coherent_product(*b, beta)) > 1.0 - 1e-6);

  const auto obs = observables(res.state);
  for (std::size_t s = 0; s < kNumSites; ++s) {
    CHECK(obs.density[s] == doctest::Approx(std::norm(alpha[s])).epsilon(1e-6));
  }
  CHECK(obs.g2_11 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(obs.g2_12 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Krylov and sparse LU agree") {
  const auto lattice = default_lattice();
  // The factorization fills in almost completely; keep the basis small.
  const Liouvillian l(lattice, basis(2, 2));
  SteadyStateOptions lu;
  lu.method = SteadyStateMethod::SparseLU;
  const auto a = steady_state_direct(l);
  const auto c = steady_state_direct(l, lu);
  CHECK(trace_distance(a.state, c.state) < 1e-9);
  CHECK(std::abs(a.state.trace() - 1.0) < 1e-12);
  CHECK(a.raw_hermiticity_error < 1e-10);
  CHECK(a.state.min_eigenvalue() > -1e-10);
  CHECK(constrained_min_singular_value(l) > 1e-6);
}

TEST_CASE("time evolution reaches the direct steady state") {
  model::ModelParams p;
  p.delta = 0.5;
  const Liouvillian l(model::resolve(p), basis(2, 2));
  const auto direct = steady_state_direct(l);
  EvolutionOptions opts;
  opts.t_max = 400.0;
  opts.tolerance = 1e-10;
  const auto evo = steady_state_by_evolution(l, vacuum(l.basis()), opts);
  CHECK(evo.converged);
  CHECK(trace_distance(evo.state, direct.state) < 1e-7);
}

TEST_CASE("displaced and plain frames agree for a weak drive") {
  model::ModelParams p;
  p.f = 0.1;
  const auto lattice = model::resolve(p);
  const Liouvillian plain(lattice, basis(6, 6));
  Frame frame;
  frame.displacement = linear_amplitudes(lattice);
  const Liouvillian shifted(lattice, basis(3, 4), frame);
  const auto a = observables(steady_state_direct(plain).state);
  const auto b = observables(steady_state_direct(shifted).state);
  CHECK(a.n_tot == doctest::Approx(b.n_tot).epsilon(1e-8));
  CHECK(a.n_b == doctest::Approx(b.n_b).epsilon(1e-6));
}

TEST_CASE("expectation values and cutoffs") {
  const auto b = basis(2);
  DensityMatrix vac{b, {}, vacuum(*b)};
  CHECK(expectation(vac, fock::Monomial{}) == cplx(1.0));
  CHECK(vac.truncation_population() == 0.0);
  CHECK_THROWS_AS(expectation(vac, fock::Monomial{{0, 3, 0, 0, 0, 0}, {0, 3, 0, 0, 0, 0}}), InvalidInput);

  // In a displaced frame the vacuum is a coherent state with the frame amplitudes.
  Frame frame;
  frame.displacement[1] = {0.5, -0.25};
  DensityMatrix shifted{b, frame, vacuum(*b)};
  const fock::Monomial b1{{}, {0, 1, 0, 0, 0, 0}};
  CHECK(std::abs(expectation(shifted, b1) - frame.displacement[1]) < 1e-15);
  CHECK(std::abs(expectation(shifted, fock::pair_number_operator(Site::B1, Site::B1)) -
                 std::pow(std::norm(frame.displacement[1]), 2)) < 1e-15);
  CHECK_THROWS_AS(trace_distance(vac, shifted), InvalidInput);
}

TEST_CASE("memory budget guards") {
  const Liouvillian l(default_lattice(), basis(2, 3));
  CHECK_THROWS_AS(l.to_sparse(1024), BudgetExceeded);
  CHECK_THROWS_AS(build_liouvillian(default_lattice(), basis(5)), BudgetExceeded);
  CHECK(krylov_bytes(100, 30) > 100 * 100 * 16 * 30);
}
