#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lieb/singleparticle.hpp"

using namespace lieb;
using namespace lieb::singleparticle;

namespace {

model::ResolvedLattice clean(double j) {
  model::ModelParams p;
  p.j = j;
  return model::resolve(p);
}

// Closed-form ring spectrum: omega_c on the a-c antibonding combination, and
// omega_c +- J sqrt(|1 + e^{ik}|^2 + 1) at k in {0, pi}.
std::vector<double> analytic_levels(double j, double wc) {
  std::vector<double> out;
  for (double k : {0.0, M_PI}) {
    const double r = j * std::sqrt(std::norm(1.0 + std::polar(1.0, k)) + 1.0);
    out.insert(out.end(), {wc - r, wc, wc + r});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("clean spectrum at J = 3") {
  const double wc = 2.5;
  const auto spec = diagonalize(single_particle_hamiltonian(clean(3.0), Frame::Lab, wc));
  const auto expected = analytic_levels(3.0, wc);
  for (int i = 0; i < 6; ++i) CHECK(spec.energies[i] == doctest::Approx(expected[i]).epsilon(1e-13));
  CHECK(expected.front() == doctest::Approx(wc - 3.0 * std::sqrt(5.0)));
  CHECK(expected[1] == doctest::Approx(wc - 3.0));

  const auto fb = flat_band_check(spec, wc);
  CHECK(fb.degenerate);
  CHECK(fb.energy_offset < 1e-12);
  CHECK(fb.max_dark_amplitude < 1e-10);
  CHECK(fb.projector_difference < 1e-10);
}

TEST_CASE("eigenvectors are orthonormal and satisfy H v = E v") {
  for (double j : {0.5, 1.0, 3.0, 6.0}) {
    const Matrix6c h = single_particle_hamiltonian(clean(j));
    const auto spec = diagonalize(h);
    CHECK((spec.vectors.adjoint() * spec.vectors - Matrix6c::Identity()).norm() < 1e-12);
    for (int i = 0; i < 6; ++i) {
      CHECK((h * spec.vectors.col(i) - spec.energies[i] * spec.vectors.col(i)).norm() < 1e-12);
    }
  }
}

TEST_CASE("k labels on the clean ring") {
  const auto spec = diagonalize(single_particle_hamiltonian(clean(3.0)));
  int zero = 0;
  int pi = 0;
  for (auto k : spec.k_labels) {
    zero += k == KLabel::Zero;
    pi += k == KLabel::Pi;
  }
  CHECK(zero == 3);
  CHECK(pi == 3);
  CHECK(spec.k_labels.front() == KLabel::Zero);  // bottom of the band, -sqrt5 J
  CHECK(spec.k_labels.back() == KLabel::Zero);
  CHECK(to_string(KLabel::Pi) == "pi");
}

TEST_CASE("Bloch matrices reproduce the ring spectrum") {
  std::vector<double> bloch;
  for (double k : {0.0, M_PI}) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> s(bloch_hamiltonian(k, 3.0, 0.0));
    for (int i = 0; i < 3; ++i) bloch.push_back(s.eigenvalues()(i));
  }
  std::sort(bloch.begin(), bloch.end());
  const auto spec = diagonalize(single_particle_hamiltonian(clean(3.0)));
  for (int i = 0; i < 6; ++i) CHECK(bloch[i] == doctest::Approx(spec.energies[i]).epsilon(1e-12));

  // The flat level is k independent.
  for (double k : {0.3, 1.1, 2.0}) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> s(bloch_hamiltonian(k, 3.0, 0.0));
    CHECK(std::abs(s.eigenvalues()(1)) < 1e-12);
  }
}

TEST_CASE("reference flat-band states") {
  const Matrix6c h = single_particle_hamiltonian(clean(3.0));
  for (const Vector6c& v : {flat_band_state_k0(), flat_band_state_kpi()}) {
    CHECK(std::abs(v.norm() - 1.0) < 1e-15);
    CHECK((h * v).norm() < 1e-14);
    CHECK(v(index(Site::B1)) == cplx{});
    CHECK(v(index(Site::B2)) == cplx{});
  }
  CHECK(std::abs(flat_band_state_k0().dot(flat_band_state_kpi())) < 1e-15);
}

TEST_CASE("cell swap commutes with the clean Hamiltonian") {
  const Matrix6c h = single_particle_hamiltonian(clean(3.0));
  const Matrix6c t = cell_swap();
  CHECK((t * t - Matrix6c::Identity()).norm() == 0.0);
  CHECK((t * h - h * t).norm() < 1e-14);
}

TEST_CASE("rotating frame shifts every level by -Delta") {
  model::ModelParams p;
  p.delta = 1.75;
  const auto lattice = model::resolve(p);
  const auto lab = diagonalize(single_particle_hamiltonian(lattice, Frame::Lab, 0.0));
  const auto rot = diagonalize(single_particle_hamiltonian(lattice, Frame::Rotating));
  for (int i = 0; i < 6; ++i) CHECK(rot.energies[i] == doctest::Approx(lab.energies[i] - 1.75));
  CHECK(flat_band_check(rot, -1.75).degenerate);
}

TEST_CASE("hopping disorder keeps the zero level doubly degenerate") {
  model::ModelParams p;
  model::DisorderRealization d;
  d.w_hop = 1.0;
  d.edge_shifts = {0.4, -0.3, 0.1, 0.45, -0.2, -0.5};
  const auto spec = diagonalize(single_particle_hamiltonian(model::resolve(p, d)));
  const auto fb = flat_band_check(spec, 0.0);
  CHECK(fb.energy_offset < 1e-12);
  CHECK(fb.max_dark_amplitude < 1e-10);
}

TEST_CASE("frequency disorder splits the flat pair") {
  model::ModelParams p;
  model::DisorderRealization d;
  d.w_freq = 0.5;
  d.site_shifts = {0.4, -0.3, 0.1, -0.45, 0.2, -0.5};
  const auto spec = diagonalize(single_particle_hamiltonian(model::resolve(p, d)));
  const auto fb = flat_band_check(spec, 0.0);
  CHECK_FALSE(fb.degenerate);
  CHECK(fb.splitting > 1e-3);
  CHECK(fb.max_dark_amplitude > 1e-3);
}
