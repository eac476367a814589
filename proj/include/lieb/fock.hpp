#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "lieb/model.hpp"

namespace lieb::fock {

// Ordered set of occupation vectors with O(1) lookup. Ordering is lexicographic
// in (n_a1, n_b1, n_c1, n_a2, n_b2, n_c2).
class OccupationList {
 public:
  std::size_t size() const { return states_.size(); }
  const Occupation& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<Occupation>& states() const { return states_; }
  // -1 when the vector is not a member.
  std::ptrdiff_t index_of(const Occupation& n) const;
  bool contains(const Occupation& n) const { return index_of(n) >= 0; }

 protected:
  void finalize(std::vector<Occupation> states);

 private:
  std::vector<Occupation> states_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

int total(const Occupation& n);
std::uint64_t pack(const Occupation& n);

// Truncated Fock space: each n_s <= n_max, optionally sum n_s <= total_max.
class FockBasis : public OccupationList {
 public:
  explicit FockBasis(int n_max, std::optional<int> total_max = std::nullopt);
  int n_max() const { return n_max_; }
  std::optional<int> total_max() const { return total_max_; }
  int max_total() const;
  // Basis indices grouped by total photon number, index N holds sector N.
  const std::vector<std::vector<std::size_t>>& sectors() const { return sectors_; }

 private:
  int n_max_;
  std::optional<int> total_max_;
  std::vector<std::vector<std::size_t>> sectors_;
};

// Fixed photon number N; each n_s <= min(N, n_max).
class SectorBasis : public OccupationList {
 public:
  explicit SectorBasis(int total_n, std::optional<int> n_max = std::nullopt);
  int total_n() const { return total_n_; }

 private:
  int total_n_;
};

// prod_s (s^dagger)^{create_s} s^{annihilate_s}, normally ordered.
struct Monomial {
  Occupation create{};
  Occupation annihilate{};
  int creation_order() const { return total(create); }
  int annihilation_order() const { return total(annihilate); }
  bool operator==(const Monomial&) const = default;
};

Monomial number_operator(Site s);
Monomial pair_number_operator(Site i, Site j);  // s_i^dag s_j^dag s_j s_i

struct Term {
  cplx coeff;
  Monomial mono;
};
using Polynomial = std::vector<Term>;

// Merges equal monomials and drops terms with |coeff| <= drop_tol.
Polynomial simplify(const Polynomial& poly, double drop_tol = 0.0);

// Rotating-frame Hamiltonian as a normally ordered polynomial:
//   sum_s (-Delta_s n_s + U/2 s^dag s^dag s s) - sum_e J_e (s^dag r + r^dag s)
//   + [drive] sum_c (F c^dag + F^* c)
Polynomial hamiltonian_terms(const model::ResolvedLattice& lattice, bool include_drive);

// Substitutes s -> alpha_s + s and re-expands in normal order. The constant term is dropped
// when drop_constant is set.
Polynomial displace(const Polynomial& poly, const SiteArrayC& alpha, bool drop_constant = true);

// Each column has at most one non-zero entry (monomials map basis states to basis states).
// Results that leave the truncated space are projected out.
SparseOperator monomial_operator(const OccupationList& basis, const Monomial& mono);
SparseOperator to_operator(const OccupationList& basis, const Polynomial& poly);

SparseOperator annihilation(Site s, const OccupationList& basis);
SparseOperator hamiltonian(const model::ResolvedLattice& lattice, const OccupationList& basis, bool include_drive);

double hermiticity_error(const SparseOperator& op);

// ---------------------------------------------------------------------------
// Fixed-photon-number analysis of the closed system.

struct SectorSpectrum {
  SectorBasis basis;
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXcd vectors;   // columns
};

// Dense diagonalization of the undriven Hamiltonian in the N-photon sector.
SectorSpectrum sector_spectrum(const model::ResolvedLattice& lattice, int total_n);

// Two-photon spectrum of the clean lattice (F = 0) in the lab frame, energies relative to 2 omega_c.
SectorSpectrum two_photon_spectrum(const model::ModelParams& params);

Eigen::VectorXcd two_photon_psi1(const SectorBasis& basis);
Eigen::VectorXcd two_photon_psi2(const SectorBasis& basis);

struct ResonantState {
  std::size_t level = 0;
  double energy = 0.0;  // E^(2) - 2 omega_c
  double overlap_psi1 = 0.0;
  double overlap_psi2 = 0.0;
  double double_occupancy_weight = 0.0;  // weight on n_b1 = 2 or n_b2 = 2
  double pair_weight = 0.0;              // weight on n_b1 = n_b2 = 1
  double darksite_weight() const { return double_occupancy_weight + pair_weight; }
};

// Per-level dark-site weights and overlaps with the two reference states.
std::vector<ResonantState> state_table(const SectorSpectrum& spectrum);

// The `count` levels closest to 2 omega_c, in ascending energy order.
std::vector<ResonantState> resonant_state_overlaps(const model::ModelParams& params, std::size_t count = 5);

}  // namespace lieb::fock
