#include <doctest.h>

#include <cmath>

#include "lieb/meanfield.hpp"
#include "lieb/singleparticle.hpp"

using namespace lieb;
using namespace lieb::meanfield;

namespace {

double max_abs(const SiteArrayC& a) {
  double m = 0.0;
  for (auto x : a) m = std::max(m, std::abs(x));
  return m;
}

double max_diff(const SiteArrayC& a, const SiteArrayC& b) {
  double m = 0.0;
  for (std::size_t s = 0; s < kNumSites; ++s) m = std::max(m, std::abs(a[s] - b[s]));
  return m;
}

}  // namespace

TEST_CASE("undriven field vanishes") {
  model::ModelParams p;
  p.f = 0.0;
  const auto f = gp_steady_state(model::resolve(p));
  CHECK(f.converged);
  CHECK(max_abs(f.alpha) == 0.0);
}

TEST_CASE("linear solution against an independent 6x6 solve") {
  model::ModelParams p;
  p.u = 0.0;
  p.delta = 1.3;
  p.f = {0.3, 0.4};
  const auto lattice = model::resolve(p);
  const auto h1 = singleparticle::single_particle_hamiltonian(lattice, singleparticle::Frame::Rotating);
  singleparticle::Vector6c f = singleparticle::Vector6c::Zero();
  f(index(Site::C1)) = f(index(Site::C2)) = p.f;
  const singleparticle::Vector6c ref =
      (h1 - cplx(0.0, 0.5) * singleparticle::Matrix6c::Identity()).fullPivLu().solve(-f);
  const auto lin = linear_solution(lattice);
  for (std::size_t s = 0; s < kNumSites; ++s) CHECK(std::abs(lin[s] - ref(s)) < 1e-14);

  const auto gp = gp_steady_state(lattice);
  CHECK(gp.converged);
  CHECK(max_diff(gp.alpha, lin) < 1e-12);
  CHECK(max_abs(gp_rhs(lattice, lin)) < 1e-14);
}

TEST_CASE("isolated Kerr cavity") {
  model::ModelParams p;
  p.j = 0.0;
  p.delta = 0.5;
  p.u = 0.2;
  p.f = 0.7;
  const auto f = gp_steady_state(model::resolve(p));
  REQUIRE(f.converged);
  const cplx a = f.alpha[index(Site::C1)];
  // Closed form: F = (Delta + i gamma/2 - U |a|^2) a.
  CHECK(std::abs((cplx(p.delta, 0.5) - p.u * std::norm(a)) * a - p.f) < 1e-10);
  CHECK(std::abs(f.alpha[index(Site::B1)]) == 0.0);
}

TEST_CASE("Kerr bistability: Newton reaches both branches") {
  model::ModelParams p;
  p.j = 0.0;
  p.delta = 3.0;
  p.u = 0.1;
  p.f = 4.0;
  const auto lattice = model::resolve(p);
  SiteArrayC low{}, high{};
  low[index(Site::C1)] = low[index(Site::C2)] = p.f / cplx(p.delta, 0.5);
  high[index(Site::C1)] = high[index(Site::C2)] = cplx(std::sqrt(38.0), 0.0);
  const auto a = gp_newton(lattice, low);
  const auto b = gp_newton(lattice, high);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(a.residual < 1e-10);
  CHECK(b.residual < 1e-10);
  const double na = std::norm(a.alpha[index(Site::C1)]);
  const double nb = std::norm(b.alpha[index(Site::C1)]);
  CHECK(std::abs(na - nb) > 10.0);
  for (double n : {na, nb}) {
    // n ((U n - Delta)^2 + gamma^2/4) = |F|^2
    CHECK(n * (std::pow(p.u * n - p.delta, 2) + 0.25) == doctest::Approx(16.0).epsilon(1e-8));
  }
}

TEST_CASE("global phase covariance") {
  model::ModelParams p;
  p.delta = 0.3;
  const auto base = gp_steady_state(model::resolve(p));
  p.f = std::polar(0.5, 1.1);
  const auto rotated = gp_steady_state(model::resolve(p));
  REQUIRE(base.converged);
  REQUIRE(rotated.converged);
  for (std::size_t s = 0; s < kNumSites; ++s) {
    CHECK(std::abs(rotated.alpha[s] - std::polar(1.0, 1.1) * base.alpha[s]) < 1e-10);
  }
}

TEST_CASE("pseudo-time integration agrees with Newton") {
  model::ModelParams p;
  p.delta = -0.8;
  const auto lattice = model::resolve(p);
  const auto newton = gp_newton(lattice, linear_solution(lattice));
  const auto pt = gp_pseudo_time(lattice, SiteArrayC{});
  REQUIRE(newton.converged);
  REQUIRE(pt.converged);
  CHECK(max_diff(newton.alpha, pt.alpha) < 1e-9);
}

TEST_CASE("detuning sweep") {
  std::vector<double> deltas;
  for (int i = 0; i <= 160; ++i) deltas.push_back(-8.0 + 0.1 * i);
  model::ModelParams p;
  const auto sweep = gp_density_sweep(p, deltas);
  REQUIRE(sweep.size() == deltas.size());
  std::vector<double> n_tot;
  for (const auto& pt : sweep) {
    CHECK(pt.field.converged);
    CHECK_FALSE(pt.branch_jump);
    double n = 0.0;
    for (auto a : pt.field.alpha) n += std::norm(a);
    n_tot.push_back(n);
  }
  // Peaks of the driven band structure: the flat level and the two bonding levels.
  auto local_max = [&](double d) {
    const auto i = static_cast<std::size_t>(std::lround((d + 8.0) / 0.1));
    std::size_t best = i;
    for (std::size_t k = i - 3; k <= i + 3; ++k) best = n_tot[k] > n_tot[best] ? k : best;
    return deltas[best];
  };
  CHECK(std::abs(local_max(0.0)) <= 0.1 + 1e-12);
  CHECK(std::abs(local_max(3.0 * std::sqrt(5.0)) - 3.0 * std::sqrt(5.0)) <= 0.1);
  CHECK(std::abs(local_max(-3.0 * std::sqrt(5.0)) + 3.0 * std::sqrt(5.0)) <= 0.1);

  // At U = 0 the sweep is the linear solution everywhere.
  p.u = 0.0;
  const auto lin = gp_density_sweep(p, deltas);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    auto q = p;
    q.delta = deltas[i];
    CHECK(max_diff(lin[i].field.alpha, linear_solution(model::resolve(q))) < 1e-10);
  }
}

TEST_CASE("dark sites stay empty at zero detuning") {
  const auto f = gp_steady_state(model::resolve(model::ModelParams{}));
  REQUIRE(f.converged);
  CHECK_FALSE(f.bistable);
  const double n_c = std::norm(f.alpha[index(Site::C1)]);
  const double n_b = std::norm(f.alpha[index(Site::B1)]);
  CHECK(n_b / n_c < 1e-2);
}
