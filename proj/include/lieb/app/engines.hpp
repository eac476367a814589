#pragma once

#include <string>

#include <json.hpp>

#include "lieb/hierarchy.hpp"
#include "lieb/liouville.hpp"
#include "lieb/meanfield.hpp"

namespace lieb::app {

struct OracleSettings {
  int n_max = 5;
  int total_cap = 5;  // 0: per-site cutoff only
  bool displaced = true;  // expand around the mean-field amplitudes
  double tolerance = 1e-11;
  std::size_t memory_budget = kDefaultMemoryBudget;
};

struct EngineSettings {
  int n_c = 4;
  bool convergence_check = true;
  OracleSettings oracle;
};

void to_json(nlohmann::json& j, const EngineSettings& s);
void from_json(const nlohmann::json& j, EngineSettings& s);

inline constexpr double kTruncationLimit = 1e-4;

enum class Status { Ok, Unconverged, Failed };
std::string_view to_string(Status s);

struct EngineRow {
  std::string engine;
  Status status = Status::Failed;
  std::string message;
  SiteArray density{};
  double n_tot = std::nan("");
  double n_b = std::nan("");
  double n_b1 = std::nan("");
  double n_b2 = std::nan("");
  double g2_11 = std::nan("");
  double g2_22 = std::nan("");
  double g2_12 = std::nan("");
  // hierarchy: N_c -> N_c + 1 delta; oracle: truncation population; meanfield: NaN
  double convergence = std::nan("");
  double residual = std::nan("");
  int iterations = 0;
};

// Never throw for solver trouble; failures are reported in the row.
EngineRow run_hierarchy(const model::ResolvedLattice& lattice, const EngineSettings& settings);
EngineRow run_oracle(const model::ResolvedLattice& lattice, const EngineSettings& settings);
EngineRow meanfield_row(const meanfield::CoherentField& field);
EngineRow run_meanfield(const model::ResolvedLattice& lattice);

// Oracle steady state with the settings above; throws on failure.
struct OracleSolution {
  liouville::SteadyStateResult result;
  liouville::OracleObservables obs;
  std::size_t dim = 0;
};
OracleSolution solve_oracle(const model::ResolvedLattice& lattice, const OracleSettings& settings);

}  // namespace lieb::app
