#pragma once

#include <string>

#include "lieb/model.hpp"

namespace lieb::singleparticle {

using Matrix6c = Eigen::Matrix<cplx, 6, 6>;
using Vector6c = Eigen::Matrix<cplx, 6, 1>;

enum class Frame { Lab, Rotating };

enum class KLabel { Zero, Pi, Mixed };
std::string to_string(KLabel k);

// Closed, non-interacting, undriven one-photon Hamiltonian. Lab frame: diagonal
// omega_c + w_freq xi_s; rotating frame: diagonal -Delta_s. Off-diagonal -J_e on edges.
Matrix6c single_particle_hamiltonian(const model::ResolvedLattice& lattice, Frame frame = Frame::Lab,
                                     double omega_c = 0.0);

// Cell-swap permutation a1<->a2, b1<->b2, c1<->c2.
Matrix6c cell_swap();

struct SingleParticleSpectrum {
  std::array<double, 6> energies{};  // ascending
  Matrix6c vectors;                  // column i pairs with energies[i]
  std::array<KLabel, 6> k_labels{};
};

inline constexpr double kDegeneracyThreshold = 1e-9;

// Diagonalizes h. Inside each degenerate group the basis is rotated onto cell-swap
// eigenvectors so that k labels are well defined whenever the swap is a symmetry.
SingleParticleSpectrum diagonalize(const Matrix6c& h);

// 3x3 Bloch matrix of the clean ring at wave vector k (sublattice order a, b, c).
Eigen::Matrix3cd bloch_hamiltonian(double k, double j, double omega_c = 0.0);

// Reference compact flat-band states, normalized.
Vector6c flat_band_state_k0();
Vector6c flat_band_state_kpi();

struct FlatBandReport {
  double reference_energy = 0.0;
  std::array<std::size_t, 2> levels{};  // indices into the spectrum
  double energy_offset = 0.0;           // max |E - reference| over the pair
  double splitting = 0.0;               // |E_1 - E_0|
  bool degenerate = false;              // splitting below kDegeneracyThreshold
  double max_dark_amplitude = 0.0;      // max |<b_i|v>| over the pair
  double projector_difference = 0.0;    // operator norm of P_numeric - P_reference
};

// Picks the two levels closest to reference_energy. For a disordered lattice the
// splitting is informational.
FlatBandReport flat_band_check(const SingleParticleSpectrum& spectrum, double reference_energy = 0.0);

}  // namespace lieb::singleparticle
