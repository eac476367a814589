#include "lieb/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lieb {

namespace {
constexpr std::array<std::string_view, kNumSites> kSiteNames = {"a1", "b1", "c1", "a2", "b2", "c2"};
}

std::string_view site_name(Site s) { return kSiteNames[index(s)]; }

Site site_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumSites; ++i) {
    if (kSiteNames[i] == name) return static_cast<Site>(i);
  }
  throw InvalidInput("unknown site label: " + std::string(name));
}

namespace model {

void ModelParams::validate(bool allow_negative) const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(gamma > 0.0) || !finite(gamma)) throw InvalidInput("gamma must be positive and finite");
  if (!finite(delta) || !finite(u) || !finite(j) || !finite(f.real()) || !finite(f.imag()))
    throw InvalidInput("model parameters must be finite");
  if (!allow_negative && (u < 0.0 || j < 0.0))
    throw InvalidInput("negative u or j requires an explicit override");
}

std::vector<Site> LatticeGraph::neighbors(Site s) const {
  std::vector<Site> out;
  for (const auto& [x, y] : edges) {
    if (x == s) out.push_back(y);
    if (y == s) out.push_back(x);
  }
  return out;
}

int LatticeGraph::degree(Site s) const { return static_cast<int>(neighbors(s).size()); }

bool LatticeGraph::is_drive_site(Site s) const {
  return std::find(drive_sites.begin(), drive_sites.end(), s) != drive_sites.end();
}

const LatticeGraph& build_lattice() {
  using S = Site;
  static const LatticeGraph graph{
      {S::A1, S::B1, S::C1, S::A2, S::B2, S::C2},
      {{{S::A1, S::B1}, {S::B1, S::C1}, {S::A1, S::B2}, {S::A2, S::B2}, {S::B2, S::C2}, {S::A2, S::B1}}},
      {S::C1, S::C2},
      {S::B1, S::B2}};
  return graph;
}

void DisorderRealization::validate() const {
  auto in_range = [](double x) { return std::isfinite(x) && x >= -0.5 && x <= 0.5; };
  if (!std::all_of(site_shifts.begin(), site_shifts.end(), in_range) ||
      !std::all_of(edge_shifts.begin(), edge_shifts.end(), in_range))
    throw InvalidInput("disorder shifts must lie in [-1/2, 1/2]");
  if (!(w_freq >= 0.0) || !(w_hop >= 0.0)) throw InvalidInput("disorder strengths must be non-negative");
}

ResolvedLattice resolve(const ModelParams& params, const DisorderRealization& disorder) {
  params.validate();
  disorder.validate();
  const auto& graph = build_lattice();

  ResolvedLattice out;
  out.u = params.u;
  out.gamma = params.gamma;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    out.frequency_shift[s] = disorder.w_freq * disorder.site_shifts[s];
    // A positive cavity shift moves the cavity towards the pump: the detuning shrinks.
    out.detuning[s] = params.delta - out.frequency_shift[s];
  }
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    out.hopping[e] = params.j + disorder.w_hop * disorder.edge_shifts[e];
    if (out.hopping[e] < 0.0) {
      std::ostringstream msg;
      msg << "resolved hopping on edge " << site_name(graph.edges[e].first) << "-"
          << site_name(graph.edges[e].second) << " is negative (" << out.hopping[e] << ")";
      throw InvalidInput(msg.str());
    }
  }
  for (Site s : graph.drive_sites) out.drive[index(s)] = params.f;
  return out;
}

}  // namespace model
}  // namespace lieb
