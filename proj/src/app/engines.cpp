#include "lieb/app/engines.hpp"

namespace lieb::app {

void to_json(nlohmann::json& j, const EngineSettings& s) {
  j = {{"n_c", s.n_c},
       {"convergence_check", s.convergence_check},
       {"oracle",
        {{"n_max", s.oracle.n_max},
         {"total_cap", s.oracle.total_cap},
         {"displaced", s.oracle.displaced},
         {"tolerance", s.oracle.tolerance},
         {"memory_budget", s.oracle.memory_budget}}}};
}

void from_json(const nlohmann::json& j, EngineSettings& s) {
  s.n_c = j.at("n_c").get<int>();
  s.convergence_check = j.at("convergence_check").get<bool>();
  const auto& o = j.at("oracle");
  s.oracle.n_max = o.at("n_max").get<int>();
  s.oracle.total_cap = o.at("total_cap").get<int>();
  s.oracle.displaced = o.at("displaced").get<bool>();
  s.oracle.tolerance = o.at("tolerance").get<double>();
  s.oracle.memory_budget = o.at("memory_budget").get<std::size_t>();
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Ok:
      return "ok";
    case Status::Unconverged:
      return "unconverged";
    case Status::Failed:
      return "failed";
  }
  return "failed";
}

EngineRow run_hierarchy(const model::ResolvedLattice& lattice, const EngineSettings& settings) {
  EngineRow row;
  row.engine = "hierarchy";
  try {
    const auto r = hierarchy::solve_point(lattice, settings.n_c, settings.convergence_check);
    row.density = r.obs.density;
    row.n_tot = r.obs.n_tot;
    row.n_b = r.obs.n_b;
    row.n_b1 = r.obs.n_b1;
    row.n_b2 = r.obs.n_b2;
    row.g2_11 = r.obs.g2_11;
    row.g2_22 = r.obs.g2_22;
    row.g2_12 = r.obs.g2_12;
    row.convergence = r.convergence_delta;
    row.residual = r.residual;
    row.iterations = r.iterations;
    row.status = Status::Ok;
    if (settings.convergence_check && !(r.convergence_delta < 0.01)) {
      row.status = Status::Unconverged;
      row.message = "cutoff convergence delta above 1%";
    }
    if (r.obs.n_b_below_floor) row.message = "dark-site density below floor; g2 not meaningful";
  } catch (const std::exception& e) {
    row.status = Status::Failed;
    row.message = e.what();
  }
  return row;
}

OracleSolution solve_oracle(const model::ResolvedLattice& lattice, const OracleSettings& settings) {
  liouville::Frame frame;
  if (settings.displaced) {
    const auto field = meanfield::gp_steady_state(lattice);
    frame.displacement = field.converged ? field.alpha : meanfield::linear_solution(lattice);
  }
  std::optional<int> cap;
  if (settings.total_cap > 0) cap = settings.total_cap;
  auto basis = std::make_shared<const fock::FockBasis>(settings.n_max, cap);
  const auto l = liouville::build_liouvillian(lattice, basis, frame, settings.memory_budget);
  liouville::SteadyStateOptions opts;
  opts.tolerance = settings.tolerance;
  opts.memory_budget = settings.memory_budget;
  OracleSolution out;
  out.result = liouville::steady_state_direct(l, opts);
  out.obs = liouville::observables(out.result.state);
  out.obs.residual = out.result.residual;
  out.dim = l.dim();
  return out;
}

EngineRow run_oracle(const model::ResolvedLattice& lattice, const EngineSettings& settings) {
  EngineRow row;
  row.engine = "oracle";
  try {
    const auto sol = solve_oracle(lattice, settings.oracle);
    const auto& o = sol.obs;
    row.density = o.density;
    row.n_tot = o.n_tot;
    row.n_b = o.n_b;
    row.n_b1 = o.density[index(Site::B1)];
    row.n_b2 = o.density[index(Site::B2)];
    row.g2_11 = o.g2_11;
    row.g2_22 = o.g2_22;
    row.g2_12 = o.g2_12;
    row.convergence = o.max_level_population;
    row.residual = o.residual;
    row.iterations = sol.result.iterations;
    row.status = o.max_level_population < kTruncationLimit ? Status::Ok : Status::Unconverged;
    if (row.status == Status::Unconverged) row.message = "Fock cutoff population above 1e-4";
  } catch (const std::exception& e) {
    row.status = Status::Failed;
    row.message = e.what();
  }
  return row;
}

EngineRow meanfield_row(const meanfield::CoherentField& field) {
  EngineRow row;
  row.engine = "meanfield";
  for (std::size_t s = 0; s < kNumSites; ++s) row.density[s] = std::norm(field.alpha[s]);
  row.n_tot = 0.0;
  for (double d : row.density) row.n_tot += d;
  row.n_b1 = row.density[index(Site::B1)];
  row.n_b2 = row.density[index(Site::B2)];
  row.n_b = 0.5 * (row.n_b1 + row.n_b2);
  row.g2_11 = row.g2_22 = row.g2_12 = 1.0;
  row.residual = field.residual;
  row.iterations = field.iterations;
  row.status = field.converged ? Status::Ok : Status::Failed;
  if (!field.converged) row.message = "mean-field iteration did not converge";
  if (field.bistable) row.message = "bistable";
  return row;
}

EngineRow run_meanfield(const model::ResolvedLattice& lattice) {
  return meanfield_row(meanfield::gp_steady_state(lattice));
}

}  // namespace lieb::app
