#pragma once

#include <vector>

#include "lieb/model.hpp"

namespace lieb::meanfield {

struct CoherentField {
  SiteArrayC alpha{};
  bool converged = false;
  double residual = 0.0;  // max_s |rhs_s(alpha)|
  int iterations = 0;
  // A second, distinct solution was found by the other seeding strategy.
  bool bistable = false;
  std::vector<SiteArrayC> alternatives;
};

// U = 0 solution of (-Delta_s - i gamma/2) alpha_s - sum_r J_sr alpha_r + F_s = 0.
SiteArrayC linear_solution(const model::ResolvedLattice& lattice);

// rhs_s = (-Delta_s - i gamma/2 + U |alpha_s|^2) alpha_s - sum_r J_sr alpha_r + F_s
SiteArrayC gp_rhs(const model::ResolvedLattice& lattice, const SiteArrayC& alpha);

struct GpOptions {
  double tolerance = 1e-10;  // on max |rhs|
  int max_newton = 200;
  double t_max = 4000.0;  // pseudo-time fallback horizon, units of 1/gamma
  double distinct = 1e-6;  // solutions closer than this (max-norm) are the same
};

// Damped Newton from `seed`; converged flag set when the residual meets tolerance.
CoherentField gp_newton(const model::ResolvedLattice& lattice, const SiteArrayC& seed, const GpOptions& opts = {});

// Integrates i d alpha/dt = rhs(alpha) with RK4 from `start`, then polishes with Newton.
CoherentField gp_pseudo_time(const model::ResolvedLattice& lattice, const SiteArrayC& start,
                             const GpOptions& opts = {});

// Newton from the linear solution and pseudo-time integration from vacuum. Returns the first
// converged result; a distinct second solution sets the bistable flag.
CoherentField gp_steady_state(const model::ResolvedLattice& lattice, const GpOptions& opts = {});

struct SweepPoint {
  CoherentField field;
  bool branch_jump = false;  // relative change of alpha from the previous point above 0.5
};

inline constexpr double kBranchJumpThreshold = 0.5;

// Continuation: each point is seeded with the previous solution; points where that fails are
// solved from scratch.
std::vector<SweepPoint> gp_sweep(const std::vector<model::ResolvedLattice>& points, const GpOptions& opts = {});

std::vector<SweepPoint> gp_density_sweep(const model::ModelParams& params, const std::vector<double>& deltas,
                                         const model::DisorderRealization& disorder = {},
                                         const GpOptions& opts = {});

}  // namespace lieb::meanfield
