#include "lieb/singleparticle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lieb::singleparticle {

std::string to_string(KLabel k) {
  switch (k) {
    case KLabel::Zero: return "0";
    case KLabel::Pi: return "pi";
    case KLabel::Mixed: return "mixed";
  }
  return "mixed";
}

Matrix6c single_particle_hamiltonian(const model::ResolvedLattice& lattice, Frame frame, double omega_c) {
  Matrix6c h = Matrix6c::Zero();
  for (std::size_t s = 0; s < kNumSites; ++s) {
    h(s, s) = frame == Frame::Lab ? omega_c + lattice.frequency_shift[s] : -lattice.detuning[s];
  }
  const auto& graph = model::build_lattice();
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const auto a = index(graph.edges[e].first);
    const auto b = index(graph.edges[e].second);
    h(a, b) -= lattice.hopping[e];
    h(b, a) -= lattice.hopping[e];
  }
  return h;
}

Matrix6c cell_swap() {
  Matrix6c t = Matrix6c::Zero();
  for (std::size_t s = 0; s < 3; ++s) {
    t(s, s + 3) = 1.0;
    t(s + 3, s) = 1.0;
  }
  return t;
}

SingleParticleSpectrum diagonalize(const Matrix6c& h) {
  Eigen::SelfAdjointEigenSolver<Matrix6c> solver(h);
  SingleParticleSpectrum out;
  Matrix6c vecs = solver.eigenvectors();
  const auto& vals = solver.eigenvalues();
  for (int i = 0; i < 6; ++i) out.energies[i] = vals(i);

  const Matrix6c swap = cell_swap();
  int start = 0;
  while (start < 6) {
    int stop = start + 1;
    while (stop < 6 && vals(stop) - vals(stop - 1) < kDegeneracyThreshold) ++stop;
    const int n = stop - start;
    if (n > 1) {
      Eigen::MatrixXcd block = vecs.middleCols(start, n);
      Eigen::MatrixXcd t = block.adjoint() * swap * block;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rot(0.5 * (t + t.adjoint()));
      vecs.middleCols(start, n) = block * rot.eigenvectors();
    }
    start = stop;
  }
  for (int i = 0; i < 6; ++i) {
    // Fix the global phase: largest component real and positive.
    Eigen::Index k = 0;
    vecs.col(i).cwiseAbs().maxCoeff(&k);
    vecs.col(i) *= std::polar(1.0, -std::arg(vecs(k, i)));
    const double parity = (vecs.col(i).adjoint() * swap * vecs.col(i))(0).real();
    if (parity > 1.0 - 1e-8) {
      out.k_labels[i] = KLabel::Zero;
    } else if (parity < -1.0 + 1e-8) {
      out.k_labels[i] = KLabel::Pi;
    } else {
      out.k_labels[i] = KLabel::Mixed;
    }
  }
  out.vectors = vecs;
  return out;
}

Eigen::Matrix3cd bloch_hamiltonian(double k, double j, double omega_c) {
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Identity() * omega_c;
  const cplx ab = -j * (1.0 + std::polar(1.0, k));
  h(0, 1) = ab;
  h(1, 0) = std::conj(ab);
  h(1, 2) = -j;
  h(2, 1) = -j;
  return h;
}

Vector6c flat_band_state_k0() {
  Vector6c v;
  v << 1.0, 0.0, -2.0, 1.0, 0.0, -2.0;
  return v / std::sqrt(10.0);
}

Vector6c flat_band_state_kpi() {
  Vector6c v;
  v << 1.0, 0.0, 0.0, -1.0, 0.0, 0.0;
  return v / std::sqrt(2.0);
}

FlatBandReport flat_band_check(const SingleParticleSpectrum& spectrum, double reference_energy) {
  std::array<std::size_t, 6> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(spectrum.energies[a] - reference_energy) < std::abs(spectrum.energies[b] - reference_energy);
  });

  FlatBandReport report;
  report.reference_energy = reference_energy;
  report.levels = {std::min(order[0], order[1]), std::max(order[0], order[1])};
  const double e0 = spectrum.energies[report.levels[0]];
  const double e1 = spectrum.energies[report.levels[1]];
  report.energy_offset = std::max(std::abs(e0 - reference_energy), std::abs(e1 - reference_energy));
  report.splitting = std::abs(e1 - e0);
  report.degenerate = report.splitting < kDegeneracyThreshold;

  Matrix6c p_num = Matrix6c::Zero();
  for (auto lvl : report.levels) {
    const auto v = spectrum.vectors.col(lvl);
    p_num += v * v.adjoint();
    for (Site b : model::build_lattice().dark_sites) {
      report.max_dark_amplitude = std::max(report.max_dark_amplitude, std::abs(v(index(b))));
    }
  }
  const Vector6c r0 = flat_band_state_k0();
  const Vector6c r1 = flat_band_state_kpi();
  const Matrix6c p_ref = r0 * r0.adjoint() + r1 * r1.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix6c> diff(p_num - p_ref, Eigen::EigenvaluesOnly);
  report.projector_difference = diff.eigenvalues().cwiseAbs().maxCoeff();
  return report;
}

}  // namespace lieb::singleparticle
