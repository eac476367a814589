#include "lieb/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lieb::fock {

int total(const Occupation& n) { return std::accumulate(n.begin(), n.end(), 0); }

std::uint64_t pack(const Occupation& n) {
  std::uint64_t key = 0;
  for (auto v : n) key = (key << 8) | v;
  return key;
}

std::ptrdiff_t OccupationList::index_of(const Occupation& n) const {
  auto it = lookup_.find(pack(n));
  return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

void OccupationList::finalize(std::vector<Occupation> states) {
  std::sort(states.begin(), states.end());
  states_ = std::move(states);
  lookup_.clear();
  lookup_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) lookup_.emplace(pack(states_[i]), i);
}

namespace {

// All occupation vectors with n_s <= cap and sum in [lo, hi].
std::vector<Occupation> enumerate(int cap, int lo, int hi) {
  std::vector<Occupation> out;
  Occupation n{};
  while (true) {
    const int t = total(n);
    if (t >= lo && t <= hi) out.push_back(n);
    int s = static_cast<int>(kNumSites) - 1;
    while (s >= 0 && n[s] == cap) n[s--] = 0;
    if (s < 0) break;
    ++n[s];
  }
  return out;
}

double falling_sqrt(int n, int k) {
  // sqrt(n! / (n-k)!)
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= n - i;
  return std::sqrt(v);
}

Occupation unit(Site s, int count = 1) {
  Occupation n{};
  n[index(s)] = static_cast<std::uint8_t>(count);
  return n;
}

cplx ipow(cplx z, int k) {
  cplx r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

}  // namespace

FockBasis::FockBasis(int n_max, std::optional<int> total_max) : n_max_(n_max), total_max_(total_max) {
  if (n_max < 0 || n_max > 15) throw InvalidInput("n_max must lie in [0, 15]");
  if (total_max && *total_max < 0) throw InvalidInput("total_max must be non-negative");
  finalize(enumerate(n_max, 0, total_max.value_or(n_max * static_cast<int>(kNumSites))));
  sectors_.assign(max_total() + 1, {});
  for (std::size_t i = 0; i < size(); ++i) sectors_[total((*this)[i])].push_back(i);
}

int FockBasis::max_total() const {
  const int cap = n_max_ * static_cast<int>(kNumSites);
  return total_max_ ? std::min(*total_max_, cap) : cap;
}

SectorBasis::SectorBasis(int total_n, std::optional<int> n_max) : total_n_(total_n) {
  if (total_n < 0) throw InvalidInput("photon number must be non-negative");
  finalize(enumerate(std::min(total_n, n_max.value_or(total_n)), total_n, total_n));
}

Monomial number_operator(Site s) { return {unit(s), unit(s)}; }

Monomial pair_number_operator(Site i, Site j) {
  Monomial m;
  m.create[index(i)] += 1;
  m.create[index(j)] += 1;
  m.annihilate = m.create;
  return m;
}

Polynomial simplify(const Polynomial& poly, double drop_tol) {
  std::map<std::pair<std::uint64_t, std::uint64_t>, Term> merged;
  for (const auto& t : poly) {
    auto key = std::make_pair(pack(t.mono.create), pack(t.mono.annihilate));
    auto [it, inserted] = merged.try_emplace(key, Term{0.0, t.mono});
    it->second.coeff += t.coeff;
  }
  Polynomial out;
  for (auto& [key, t] : merged) {
    if (std::abs(t.coeff) > drop_tol) out.push_back(t);
  }
  return out;
}

Polynomial hamiltonian_terms(const model::ResolvedLattice& lattice, bool include_drive) {
  Polynomial h;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    const Site site = static_cast<Site>(s);
    if (lattice.detuning[s] != 0.0) h.push_back({-lattice.detuning[s], number_operator(site)});
    if (lattice.u != 0.0) h.push_back({0.5 * lattice.u, {unit(site, 2), unit(site, 2)}});
  }
  const auto& graph = model::build_lattice();
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const auto [a, b] = graph.edges[e];
    if (lattice.hopping[e] == 0.0) continue;
    h.push_back({-lattice.hopping[e], {unit(a), unit(b)}});
    h.push_back({-lattice.hopping[e], {unit(b), unit(a)}});
  }
  if (include_drive) {
    for (std::size_t s = 0; s < kNumSites; ++s) {
      const cplx f = lattice.drive[s];
      if (f == cplx{}) continue;
      const Site site = static_cast<Site>(s);
      h.push_back({f, {unit(site), {}}});
      h.push_back({std::conj(f), {{}, unit(site)}});
    }
  }
  return h;
}

Polynomial displace(const Polynomial& poly, const SiteArrayC& alpha, bool drop_constant) {
  Polynomial out;
  for (const auto& term : poly) {
    // Enumerate the kept exponents (a_s <= k_s, b_s <= l_s) site by site.
    std::vector<Term> partial{{term.coeff, Monomial{}}};
    for (std::size_t s = 0; s < kNumSites; ++s) {
      const int k = term.mono.create[s];
      const int l = term.mono.annihilate[s];
      if (k == 0 && l == 0) continue;
      std::vector<Term> next;
      next.reserve(partial.size() * (k + 1) * (l + 1));
      for (const auto& p : partial) {
        for (int a = 0; a <= k; ++a) {
          for (int b = 0; b <= l; ++b) {
            const cplx c = binomial(k, a) * binomial(l, b) * ipow(std::conj(alpha[s]), k - a) * ipow(alpha[s], l - b);
            if (c == cplx{}) continue;
            Term t = p;
            t.coeff *= c;
            t.mono.create[s] = static_cast<std::uint8_t>(a);
            t.mono.annihilate[s] = static_cast<std::uint8_t>(b);
            next.push_back(t);
          }
        }
      }
      partial = std::move(next);
    }
    for (auto& t : partial) {
      if (drop_constant && t.mono == Monomial{}) continue;
      out.push_back(t);
    }
  }
  return simplify(out);
}

SparseOperator monomial_operator(const OccupationList& basis, const Monomial& mono) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(basis.size());
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const Occupation& n = basis[col];
    Occupation out{};
    double value = 1.0;
    bool valid = true;
    for (std::size_t s = 0; s < kNumSites && valid; ++s) {
      const int mid = n[s] - mono.annihilate[s];
      if (mid < 0) {
        valid = false;
        break;
      }
      const int top = mid + mono.create[s];
      if (top > 255) {
        valid = false;
        break;
      }
      out[s] = static_cast<std::uint8_t>(top);
      value *= falling_sqrt(n[s], mono.annihilate[s]) * falling_sqrt(top, mono.create[s]);
    }
    if (!valid) continue;
    const auto row = basis.index_of(out);
    if (row < 0) continue;
    triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
  }
  SparseOperator op(basis.size(), basis.size());
  op.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

SparseOperator to_operator(const OccupationList& basis, const Polynomial& poly) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  for (const auto& term : poly) {
    const SparseOperator m = monomial_operator(basis, term.mono);
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseOperator::InnerIterator it(m, k); it; ++it) {
        triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), term.coeff * it.value());
      }
    }
  }
  SparseOperator op(basis.size(), basis.size());
  op.setFromTriplets(triplets.begin(), triplets.end());
  op.prune(cplx{0.0});
  return op;
}

SparseOperator annihilation(Site s, const OccupationList& basis) { return monomial_operator(basis, {{}, unit(s)}); }

SparseOperator hamiltonian(const model::ResolvedLattice& lattice, const OccupationList& basis, bool include_drive) {
  return to_operator(basis, hamiltonian_terms(lattice, include_drive));
}

double hermiticity_error(const SparseOperator& op) {
  const SparseOperator adj = op.adjoint();
  const SparseOperator diff = op - adj;
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseOperator::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

SectorSpectrum sector_spectrum(const model::ResolvedLattice& lattice, int total_n) {
  SectorBasis basis(total_n);
  const Eigen::MatrixXcd h = Eigen::MatrixXcd(hamiltonian(lattice, basis, false));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) throw SolverError("sector diagonalization failed");
  return {std::move(basis), solver.eigenvalues(), solver.eigenvectors()};
}

SectorSpectrum two_photon_spectrum(const model::ModelParams& params) {
  model::ModelParams lab = params;
  lab.delta = 0.0;  // energies measured from omega_c per photon
  lab.f = 0.0;
  return sector_spectrum(model::resolve(lab), 2);
}

Eigen::VectorXcd two_photon_psi1(const SectorBasis& basis) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.size());
  for (std::size_t s = 0; s < kNumSites; ++s) {
    const Site site = static_cast<Site>(s);
    const bool dark = site == Site::B1 || site == Site::B2;
    v(basis.index_of(unit(site, 2))) = dark ? -1.0 : 1.0;
  }
  return v / std::sqrt(6.0);
}

Eigen::VectorXcd two_photon_psi2(const SectorBasis& basis) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.size());
  auto pair = [](Site a, Site b) {
    Occupation n{};
    n[index(a)] = 1;
    n[index(b)] = 1;
    return n;
  };
  v(basis.index_of(pair(Site::A1, Site::A2))) = 1.0;
  v(basis.index_of(pair(Site::B1, Site::B2))) = -1.0;
  v(basis.index_of(pair(Site::C1, Site::C2))) = 1.0;
  return v / std::sqrt(3.0);
}

std::vector<ResonantState> state_table(const SectorSpectrum& spectrum) {
  const auto& basis = spectrum.basis;
  const Eigen::VectorXcd psi1 = two_photon_psi1(basis);
  const Eigen::VectorXcd psi2 = two_photon_psi2(basis);
  const auto b1 = index(Site::B1);
  const auto b2 = index(Site::B2);
  std::vector<ResonantState> rows;
  for (Eigen::Index i = 0; i < spectrum.energies.size(); ++i) {
    const auto v = spectrum.vectors.col(i);
    ResonantState r;
    r.level = static_cast<std::size_t>(i);
    r.energy = spectrum.energies(i);
    r.overlap_psi1 = std::abs(psi1.dot(v));
    r.overlap_psi2 = std::abs(psi2.dot(v));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const auto& n = basis[k];
      const double w = std::norm(v(k));
      if (n[b1] == 2 || n[b2] == 2) r.double_occupancy_weight += w;
      if (n[b1] == 1 && n[b2] == 1) r.pair_weight += w;
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<ResonantState> resonant_state_overlaps(const model::ModelParams& params, std::size_t count) {
  auto rows = state_table(two_photon_spectrum(params));
  count = std::min(count, rows.size());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.energy) < std::abs(b.energy); });
  rows.resize(count);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
  return rows;
}

}  // namespace lieb::fock
