#pragma once

#include <utility>
#include <vector>

#include "lieb/types.hpp"

namespace lieb::model {

// Physical parameters in units of the loss rate. delta = omega_p - omega_c.
struct ModelParams {
  double delta = 0.0;
  double u = 0.1;
  double j = 3.0;
  cplx f{0.5, 0.0};
  double gamma = 1.0;

  // Throws InvalidInput. Negative u or j are rejected unless allow_negative is set.
  void validate(bool allow_negative = false) const;
};

using Edge = std::pair<Site, Site>;

struct LatticeGraph {
  std::array<Site, kNumSites> sites;
  std::array<Edge, kNumEdges> edges;
  std::array<Site, 2> drive_sites;
  std::array<Site, 2> dark_sites;

  std::vector<Site> neighbors(Site s) const;
  int degree(Site s) const;
  bool is_drive_site(Site s) const;
};

// Two-cell Lieb ring with periodic boundary conditions.
const LatticeGraph& build_lattice();

struct DisorderRealization {
  SiteArray site_shifts{};  // xi_s in [-1/2, 1/2]
  EdgeArray edge_shifts{};  // xi_{s,t} in [-1/2, 1/2], one per undirected edge
  double w_freq = 0.0;
  double w_hop = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool clean() const { return w_freq == 0.0 && w_hop == 0.0; }
};

// Rotating-frame parameters after disorder has been applied.
struct ResolvedLattice {
  SiteArray detuning{};         // Delta_s = Delta - w_freq xi_s
  SiteArray frequency_shift{};  // w_freq xi_s, the lab-frame cavity offset
  EdgeArray hopping{};          // J_e = J + w_hop xi_e
  SiteArrayC drive{};           // F on c-sites, 0 elsewhere
  double u = 0.0;
  double gamma = 1.0;
};

ResolvedLattice resolve(const ModelParams& params, const DisorderRealization& disorder = {});

}  // namespace lieb::model
