#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lieb/app/commands.hpp"
#include "lieb/app/output.hpp"

using namespace lieb;
using nlohmann::json;

namespace {

int fail(const char* kind, const std::string& message, int code, json extra = json::object()) {
  json err = {{"status", "error"}, {"kind", kind}, {"message", message}};
  err.update(extra);
  std::cerr << err.dump() << '\n';
  return code;
}

std::vector<double> grid_or_empty(const std::string& text) {
  if (text.empty()) return {};
  return app::parse_grid(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Steady states of the driven-dissipative Bose-Hubbard model on a two-cell Lieb ring"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int n_c = 4;
  std::optional<int> n_max;
  std::optional<int> total_cap;
  int threads = 0;
  std::string frame = "displaced";
  bool no_convergence = false;
  std::string kernels_name = "auto";
  double budget_mib = static_cast<double>(kDefaultMemoryBudget >> 20);

  cli.add_option("--config", config_path, "JSON parameter file")->check(CLI::ExistingFile);
  cli.add_option("--out", out_dir, "Output directory")->capture_default_str();
  cli.add_option("--seed", seed, "Master seed for disorder sampling (overrides the config)");
  cli.add_option("--nc", n_c, "Hierarchy cutoff N_c")->capture_default_str();
  cli.add_option("--nmax", n_max, "Oracle per-site Fock cutoff (default 5)");
  cli.add_option("--total-cap", total_cap, "Oracle total photon cap, 0 for none (default: nmax when displaced)");
  cli.add_option("--frame", frame, "Oracle frame: displaced or plain")->check(CLI::IsMember({"displaced", "plain"}))
      ->capture_default_str();
  cli.add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();
  cli.add_flag("--no-convergence", no_convergence, "Skip the N_c + 1 convergence solve");
  cli.add_option("--kernels", kernels_name, "auto, scalar or avx2")->capture_default_str();
  cli.add_option("--memory-budget-mib", budget_mib, "Memory budget per solve")->capture_default_str();

  // sweep
  auto* sweep = cli.add_subcommand("sweep", "Sweep one parameter with one or more engines");
  std::string sweep_param = "delta";
  std::string sweep_grid;
  std::vector<std::string> sweep_engines;
  sweep->add_option("--param", sweep_param, "delta, f, j or u")->capture_default_str();
  sweep->add_option("--grid", sweep_grid, "start:stop:count or comma-separated values");
  sweep->add_option("--engines", sweep_engines, "hierarchy, oracle, meanfield")->delimiter(',');

  auto* compare = cli.add_subcommand("compare", "Hierarchy vs oracle vs mean-field at one point");

  auto* spectrum = cli.add_subcommand("spectrum", "Single-particle and two-photon spectra");
  bool sp_single = false, sp_two = false, sp_resonant = false;
  std::string sp_frame = "lab";
  double omega_c = 0.0;
  std::string u_grid;
  spectrum->add_flag("--single-particle", sp_single, "Single-particle table");
  spectrum->add_flag("--two-photon", sp_two, "Two-photon table");
  spectrum->add_flag("--resonant", sp_resonant, "Resonant cluster over a U grid");
  spectrum->add_option("--energy-frame", sp_frame, "lab or rotating")->capture_default_str();
  spectrum->add_option("--omega-c", omega_c, "Cavity frequency for the lab frame")->capture_default_str();
  spectrum->add_option("--u-grid", u_grid, "U values for the resonant cluster");

  auto* disorder = cli.add_subcommand("disorder-scan", "Disorder ensemble statistics");
  std::string kind = "freq";
  std::string w_grid;
  std::optional<int> realizations;
  int spot_checks = 5;
  disorder->add_option("--kind", kind, "freq or hop")->capture_default_str();
  disorder->add_option("--w-grid", w_grid, "Disorder strengths");
  disorder->add_option("--realizations", realizations, "Realizations per strength (overrides the config)");
  disorder->add_option("--spot-checks", spot_checks, "Oracle checks per strength")->capture_default_str();

  std::string delta_grid;
  auto* oracle = cli.add_subcommand("oracle", "Full master-equation steady state");
  auto* meanfield = cli.add_subcommand("meanfield", "Gross-Pitaevskii detuning sweep");
  auto* hierarchy = cli.add_subcommand("hierarchy", "Correlation hierarchy steady state");
  for (auto* sub : {oracle, meanfield, hierarchy}) sub->add_option("--delta-grid", delta_grid, "Detuning grid");

  auto* replay = cli.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "Manifest written next to a CSV")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (replay->parsed()) {
      const auto report = app::replay(manifest_path, out_dir, threads);
      json summary = {{"status", report.identical ? "identical" : "different"},
                      {"outputs", report.run.outputs},
                      {"differences", report.differences}};
      std::cout << summary.dump() << '\n';
      return report.identical ? 0 : 6;
    }

    app::Invocation inv;
    inv.command = cli.get_subcommands().front()->get_name();
    if (!config_path.empty()) inv.config = app::load_config(config_path);
    if (seed) inv.config.seed = *seed;
    inv.common.out = out_dir;
    inv.common.threads = threads;
    inv.common.kernels = kernels_name;
    auto& eng = inv.common.engines;
    eng.n_c = n_c;
    eng.convergence_check = !no_convergence;
    eng.oracle.displaced = frame == "displaced";
    eng.oracle.n_max = n_max.value_or(5);
    eng.oracle.total_cap = total_cap.value_or(eng.oracle.displaced ? eng.oracle.n_max : 0);
    if (!(budget_mib > 0)) throw InvalidInput("--memory-budget-mib must be positive");
    eng.oracle.memory_budget = static_cast<std::size_t>(budget_mib * (1 << 20));

    auto& a = inv.args;
    if (sweep->parsed()) {
      a["param"] = sweep_param;
      if (!sweep_grid.empty()) a["grid"] = app::parse_grid(sweep_grid);
      if (!sweep_engines.empty()) a["engines"] = sweep_engines;
    } else if (spectrum->parsed()) {
      const bool any = sp_single || sp_two || sp_resonant;
      a["single_particle"] = !any || sp_single;
      a["two_photon"] = !any || sp_two;
      a["resonant"] = !any || sp_resonant;
      a["frame"] = sp_frame;
      a["omega_c"] = omega_c;
      if (!u_grid.empty()) a["u_grid"] = app::parse_grid(u_grid);
    } else if (disorder->parsed()) {
      a["kind"] = kind;
      if (!w_grid.empty()) a["w_grid"] = app::parse_grid(w_grid);
      if (realizations) a["n_realizations"] = *realizations;
      a["spot_checks"] = spot_checks;
    } else if (oracle->parsed() || meanfield->parsed() || hierarchy->parsed()) {
      if (!delta_grid.empty()) a["delta_grid"] = grid_or_empty(delta_grid);
    } else if (!compare->parsed()) {
      return fail("usage", "no command given", 2);
    }

    const auto report = app::execute(inv);
    std::cout << json{{"status", "ok"}, {"outputs", report.outputs}, {"summary", report.summary}}.dump() << '\n';
    return 0;
  } catch (const BudgetExceeded& e) {
    return fail("budget_exceeded", e.what(), 3,
                {{"required_bytes", e.required_bytes()}, {"budget_bytes", e.budget_bytes()}});
  } catch (const InvalidInput& e) {
    return fail("invalid_input", e.what(), 2);
  } catch (const SolverError& e) {
    return fail("solver_error", e.what(), 4);
  } catch (const app::IoError& e) {
    return fail("io_error", e.what(), 5);
  } catch (const nlohmann::json::exception& e) {
    return fail("invalid_input", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
