#include "lieb/app/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lieb/app/output.hpp"
#include "lieb/ensemble.hpp"
#include "lieb/fock.hpp"
#include "lieb/kernels.hpp"
#include "lieb/parallel.hpp"
#include "lieb/singleparticle.hpp"

#ifndef LIEB_VERSION
#define LIEB_VERSION "unknown"
#endif

namespace lieb::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kEngineNames[] = {"hierarchy", "oracle", "meanfield"};

std::vector<double> grid_arg(const json& args, const char* key) {
  auto grid = args.at(key).get<std::vector<double>>();
  require_monotone(grid, key);
  return grid;
}

model::ModelParams with_param(model::ModelParams p, const std::string& name, double value) {
  if (name == "delta") {
    p.delta = value;
  } else if (name == "u") {
    p.u = value;
  } else if (name == "j") {
    p.j = value;
  } else if (name == "f") {
    const double mag = std::abs(p.f);
    p.f = mag > 0.0 ? p.f / mag * value : cplx{value, 0.0};
  } else {
    throw InvalidInput("unknown sweep parameter '" + name + "' (expected delta, f, j or u)");
  }
  return p;
}

std::vector<Cell> engine_cells(const EngineRow& r) {
  return {r.engine,  std::string(to_string(r.status)), r.n_tot, r.n_b,       r.n_b1,
          r.n_b2,    r.g2_11,  r.g2_22,                r.g2_12, r.convergence, r.residual,
          static_cast<long long>(r.iterations), r.message};
}

const std::vector<std::string> kEngineColumns = {"engine", "status", "n_tot", "n_b", "n_b1", "n_b2", "g2_11",
                                                 "g2_22", "g2_12", "convergence", "residual", "iterations",
                                                 "message"};

std::vector<EngineRow> run_engine_grid(const std::string& engine, const std::vector<model::ResolvedLattice>& points,
                                       const Common& common) {
  std::vector<EngineRow> rows(points.size());
  if (engine == "meanfield") {
    const auto sweep = meanfield::gp_sweep(points);
    for (std::size_t i = 0; i < points.size(); ++i) {
      rows[i] = meanfield_row(sweep[i].field);
      if (sweep[i].branch_jump) rows[i].message += rows[i].message.empty() ? "branch_jump" : ";branch_jump";
    }
    return rows;
  }
  parallel_for(points.size(), common.threads, [&](std::size_t i) {
    rows[i] = engine == "hierarchy" ? run_hierarchy(points[i], common.engines) : run_oracle(points[i], common.engines);
  });
  return rows;
}

// ---------------------------------------------------------------------------

struct Output {
  std::string name;
  CsvTable table;
};

std::vector<Output> cmd_sweep(const Invocation& inv, json& summary) {
  const auto& args = inv.args;
  const std::string param = args.at("param").get<std::string>();
  const auto grid = grid_arg(args, "grid");
  const auto engines = args.at("engines").get<std::vector<std::string>>();
  const auto base = inv.config.params();
  const auto disorder = inv.config.realization();

  std::vector<model::ResolvedLattice> points;
  for (double v : grid) {
    const auto p = with_param(base, param, v);
    p.validate();
    points.push_back(model::resolve(p, disorder));
  }
  std::vector<std::vector<EngineRow>> per_engine;
  for (const auto& e : engines) per_engine.push_back(run_engine_grid(e, points, inv.common));

  std::vector<std::string> header = {"param", "value"};
  header.insert(header.end(), kEngineColumns.begin(), kEngineColumns.end());
  CsvTable table(header);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (const auto& rows : per_engine) {
      std::vector<Cell> row = {param, grid[i]};
      const auto cells = engine_cells(rows[i]);
      row.insert(row.end(), cells.begin(), cells.end());
      table.add(std::move(row));
      failures += rows[i].status == Status::Failed;
    }
  }
  summary["failed_points"] = failures;
  return {{"sweep_" + param, std::move(table)}};
}

std::vector<Output> cmd_compare(const Invocation& inv, json& summary) {
  const auto lattice = model::resolve(inv.config.params(), inv.config.realization());
  const EngineRow h = run_hierarchy(lattice, inv.common.engines);
  const EngineRow o = run_oracle(lattice, inv.common.engines);
  const EngineRow m = run_meanfield(lattice);
  const bool reliable = o.status == Status::Ok;

  CsvTable table({"observable", "hierarchy", "oracle", "meanfield", "rel_dev_hierarchy", "rel_dev_meanfield",
                  "reliable"});
  auto rel = [](double x, double ref) { return std::abs(x - ref) / std::abs(ref); };
  auto add = [&](const std::string& name, double hv, double ov, double mv, bool deviations = true) {
    const double nan = std::nan("");
    table.add({name, hv, ov, mv, deviations ? rel(hv, ov) : nan, deviations ? rel(mv, ov) : nan,
               static_cast<long long>(reliable)});
  };
  for (std::size_t s = 0; s < kNumSites; ++s) {
    add("n_" + std::string(site_name(static_cast<Site>(s))), h.density[s], o.density[s], m.density[s]);
  }
  add("n_tot", h.n_tot, o.n_tot, m.n_tot);
  add("n_b", h.n_b, o.n_b, m.n_b);
  add("g2_11", h.g2_11, o.g2_11, m.g2_11);
  add("g2_22", h.g2_22, o.g2_22, m.g2_22);
  add("g2_12", h.g2_12, o.g2_12, m.g2_12);
  add("convergence", h.convergence, o.convergence, m.convergence, false);
  add("residual", h.residual, o.residual, m.residual, false);
  summary["oracle_reliable"] = reliable;
  summary["hierarchy_status"] = to_string(h.status);
  summary["oracle_status"] = to_string(o.status);
  summary["meanfield_status"] = to_string(m.status);
  if (!o.message.empty()) summary["oracle_message"] = o.message;
  if (!h.message.empty()) summary["hierarchy_message"] = h.message;
  return {{"compare", std::move(table)}};
}

std::vector<Output> cmd_spectrum(const Invocation& inv, json& summary) {
  const auto& args = inv.args;
  std::vector<Output> out;
  const auto params = inv.config.params();
  if (args.at("single_particle").get<bool>()) {
    const auto frame = args.at("frame").get<std::string>() == "rotating" ? singleparticle::Frame::Rotating
                                                                        : singleparticle::Frame::Lab;
    const double omega_c = args.at("omega_c").get<double>();
    const auto lattice = model::resolve(params, inv.config.realization());
    const auto spectrum =
        singleparticle::diagonalize(singleparticle::single_particle_hamiltonian(lattice, frame, omega_c));
    std::vector<std::string> header = {"index", "energy", "k_label"};
    for (std::size_t s = 0; s < kNumSites; ++s) {
      const std::string n(site_name(static_cast<Site>(s)));
      header.push_back("amp_" + n + "_re");
      header.push_back("amp_" + n + "_im");
    }
    CsvTable table(header);
    for (std::size_t i = 0; i < 6; ++i) {
      std::vector<Cell> row = {static_cast<long long>(i), spectrum.energies[i], singleparticle::to_string(spectrum.k_labels[i])};
      for (std::size_t s = 0; s < kNumSites; ++s) {
        row.emplace_back(spectrum.vectors(s, i).real());
        row.emplace_back(spectrum.vectors(s, i).imag());
      }
      table.add(std::move(row));
    }
    const double ref = frame == singleparticle::Frame::Lab ? omega_c : -params.delta;
    const auto fb = singleparticle::flat_band_check(spectrum, ref);
    summary["flat_band"] = {{"energy_offset", fb.energy_offset},
                            {"splitting", fb.splitting},
                            {"degenerate", fb.degenerate},
                            {"max_dark_amplitude", fb.max_dark_amplitude},
                            {"projector_difference", fb.projector_difference}};
    out.push_back({"spectrum_single", std::move(table)});
  }
  if (args.at("two_photon").get<bool>()) {
    const auto rows = fock::state_table(fock::two_photon_spectrum(params));
    CsvTable table({"index", "energy_minus_2wc", "overlap_psi1", "overlap_psi2", "darksite_weight"});
    for (const auto& r : rows) {
      table.add({static_cast<long long>(r.level), r.energy, r.overlap_psi1, r.overlap_psi2, r.darksite_weight()});
    }
    out.push_back({"spectrum_two_photon", std::move(table)});
  }
  if (args.at("resonant").get<bool>()) {
    CsvTable table({"u", "rank", "level", "energy_minus_2wc", "overlap_psi1", "overlap_psi2", "darksite_weight"});
    for (double u : args.at("u_grid").get<std::vector<double>>()) {
      auto p = params;
      p.u = u;
      const auto rows = fock::resonant_state_overlaps(p, 5);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        table.add({u, static_cast<long long>(k), static_cast<long long>(r.level), r.energy, r.overlap_psi1,
                   r.overlap_psi2, r.darksite_weight()});
      }
    }
    out.push_back({"spectrum_resonant", std::move(table)});
  }
  return out;
}

std::vector<Output> cmd_disorder_scan(const Invocation& inv, json& summary) {
  const auto& args = inv.args;
  ensemble::EnsembleConfig cfg;
  cfg.kind = ensemble::kind_from_string(args.at("kind").get<std::string>());
  cfg.w_grid = grid_arg(args, "w_grid");
  cfg.n_realizations = args.at("n_realizations").get<int>();
  cfg.master_seed = inv.config.seed;
  cfg.validate();
  const auto params = inv.config.params();
  const EngineSettings engines = inv.common.engines;
  const int n_c = engines.n_c;

  const auto stats = ensemble::run_ensemble(
      cfg,
      [&](const model::DisorderRealization& r) {
        const auto res = hierarchy::solve_point(model::resolve(params, r), n_c, false);
        return ensemble::ObservableArray{res.obs.g2_11, res.obs.g2_22, res.obs.g2_12, res.obs.n_b1, res.obs.n_b2};
      },
      inv.common.threads);

  const std::string kind(ensemble::to_string(cfg.kind));
  CsvTable table({"w", "observable", "mean", "std", "stderr", "n_ok", "n_failed", "valid"});
  json invalid = json::array();
  for (const auto& pt : stats.points) {
    for (std::size_t k = 0; k < ensemble::kNumObservables; ++k) {
      const auto& s = pt.stats[k];
      table.add({pt.w, std::string(ensemble::kObservableNames[k]), s.mean, s.std, s.stderr_mean,
                 static_cast<long long>(pt.n_ok), static_cast<long long>(pt.n_failed),
                 static_cast<long long>(pt.valid)});
    }
    if (!pt.valid) invalid.push_back({{"w", pt.w}, {"failures", pt.failures}});
  }
  summary["invalid_points"] = invalid;

  std::vector<Output> out;
  out.push_back({"disorder_" + kind, std::move(table)});

  const int spot = std::min(args.at("spot_checks").get<int>(), cfg.n_realizations);
  if (spot > 0) {
    struct Job {
      std::size_t wi;
      std::size_t ri;
    };
    std::vector<Job> jobs;
    for (std::size_t wi = 0; wi < cfg.w_grid.size(); ++wi) {
      for (int ri = 0; ri < spot; ++ri) jobs.push_back({wi, static_cast<std::size_t>(ri)});
    }
    std::vector<std::pair<EngineRow, EngineRow>> results(jobs.size());
    parallel_for(jobs.size(), inv.common.threads, [&](std::size_t k) {
      const auto lattice = model::resolve(params, ensemble::sample_realization(cfg, jobs[k].wi, jobs[k].ri));
      EngineSettings quick = engines;
      quick.convergence_check = false;
      results[k] = {run_hierarchy(lattice, quick), run_oracle(lattice, quick)};
    });
    CsvTable checks({"w", "realization", "observable", "hierarchy", "oracle", "rel_dev", "oracle_status"});
    double worst = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const auto& [h, o] = results[k];
      auto add = [&](const char* name, double hv, double ov) {
        const double dev = std::abs(hv - ov) / std::abs(ov);
        if (o.status == Status::Ok && std::isfinite(dev)) worst = std::max(worst, dev);
        checks.add({cfg.w_grid[jobs[k].wi], static_cast<long long>(jobs[k].ri), std::string(name), hv, ov, dev,
                    std::string(to_string(o.status))});
      };
      add("g2_11", h.g2_11, o.g2_11);
      add("g2_22", h.g2_22, o.g2_22);
      add("g2_12", h.g2_12, o.g2_12);
    }
    summary["spot_check_max_rel_dev"] = worst;
    out.push_back({"disorder_" + kind + "_spotcheck", std::move(checks)});
  }
  return out;
}

std::vector<model::ResolvedLattice> delta_points(const Invocation& inv, const std::vector<double>& deltas) {
  std::vector<model::ResolvedLattice> points;
  const auto disorder = inv.config.realization();
  for (double d : deltas) {
    auto p = inv.config.params();
    p.delta = d;
    points.push_back(model::resolve(p, disorder));
  }
  return points;
}

std::vector<Output> cmd_oracle(const Invocation& inv, json& summary) {
  const auto deltas = grid_arg(inv.args, "delta_grid");
  const auto rows = run_engine_grid("oracle", delta_points(inv, deltas), inv.common);
  CsvTable table({"delta", "n_tot", "n_b", "g2_local", "g2_nonlocal", "max_level_population", "residual", "status",
                  "message"});
  std::size_t failed = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& r = rows[i];
    table.add({deltas[i], r.n_tot, r.n_b, r.g2_11, r.g2_12, r.convergence, r.residual,
               std::string(to_string(r.status)), r.message});
    failed += r.status == Status::Failed;
  }
  summary["failed_points"] = failed;
  return {{"oracle", std::move(table)}};
}

std::vector<Output> cmd_meanfield(const Invocation& inv, json& summary) {
  const auto deltas = grid_arg(inv.args, "delta_grid");
  const auto sweep = meanfield::gp_sweep(delta_points(inv, deltas));
  std::vector<std::string> header = {"delta"};
  for (std::size_t s = 0; s < kNumSites; ++s) header.push_back("n_" + std::string(site_name(static_cast<Site>(s))));
  header.insert(header.end(), {"n_b", "residual", "branch_flag"});
  CsvTable table(header);
  std::size_t jumps = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& pt = sweep[i];
    std::vector<Cell> row = {deltas[i]};
    for (auto a : pt.field.alpha) row.emplace_back(std::norm(a));
    const double nb = 0.5 * (std::norm(pt.field.alpha[index(Site::B1)]) + std::norm(pt.field.alpha[index(Site::B2)]));
    // bit 0: branch jump from the previous point, bit 1: bistable, bit 2: not converged
    const long long flag = (pt.branch_jump ? 1 : 0) | (pt.field.bistable ? 2 : 0) | (pt.field.converged ? 0 : 4);
    row.insert(row.end(), {nb, pt.field.residual, flag});
    table.add(std::move(row));
    jumps += pt.branch_jump;
  }
  summary["branch_jumps"] = jumps;
  return {{"meanfield", std::move(table)}};
}

std::vector<Output> cmd_hierarchy(const Invocation& inv, json& summary) {
  const auto deltas = grid_arg(inv.args, "delta_grid");
  const auto rows = run_engine_grid("hierarchy", delta_points(inv, deltas), inv.common);
  const auto p = inv.config.params();
  CsvTable table({"delta", "u", "j", "f", "n_tot", "n_b1", "n_b2", "g2_11", "g2_22", "g2_12", "nc",
                  "convergence_delta", "residual", "status", "message"});
  std::size_t failed = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& r = rows[i];
    table.add({deltas[i], p.u, p.j, std::abs(p.f), r.n_tot, r.n_b1, r.n_b2, r.g2_11, r.g2_22, r.g2_12,
               static_cast<long long>(inv.common.engines.n_c), r.convergence, r.residual,
               std::string(to_string(r.status)), r.message});
    failed += r.status == Status::Failed;
  }
  summary["failed_points"] = failed;
  return {{"hierarchy", std::move(table)}};
}

void set_default(json& args, const char* key, const json& value) {
  if (!args.contains(key) || args[key].is_null()) args[key] = value;
}

}  // namespace

void resolve_defaults(Invocation& inv) {
  inv.config.validate();
  auto& a = inv.args;
  if (!a.is_object()) a = json::object();
  const auto& c = inv.command;
  if (c == "sweep") {
    set_default(a, "param", "delta");
    const std::string param = a["param"].get<std::string>();
    if (param == "delta") {
      set_default(a, "grid", linspace(-8.0, 8.0, 161));
    } else if (param == "f") {
      set_default(a, "grid", linspace(0.1, 2.0, 20));
    } else if (param == "j") {
      set_default(a, "grid", linspace(0.5, 6.0, 12));
    } else if (param == "u") {
      set_default(a, "grid", linspace(0.0, 1.0, 21));
    } else {
      throw InvalidInput("unknown sweep parameter '" + param + "' (expected delta, f, j or u)");
    }
    set_default(a, "engines", std::vector<std::string>{"hierarchy", "meanfield"});
    for (const auto& e : a["engines"].get<std::vector<std::string>>()) {
      if (std::find(std::begin(kEngineNames), std::end(kEngineNames), e) == std::end(kEngineNames))
        throw InvalidInput("unknown engine '" + e + "' (expected hierarchy, oracle or meanfield)");
    }
    require_monotone(a["grid"].get<std::vector<double>>(), "sweep");
  } else if (c == "compare") {
  } else if (c == "spectrum") {
    set_default(a, "single_particle", true);
    set_default(a, "two_photon", true);
    set_default(a, "resonant", true);
    set_default(a, "frame", "lab");
    set_default(a, "omega_c", 0.0);
    set_default(a, "u_grid", std::vector<double>{0.2, 0.1, 0.05, 0.02});
    const auto frame = a["frame"].get<std::string>();
    if (frame != "lab" && frame != "rotating") throw InvalidInput("frame must be lab or rotating");
  } else if (c == "disorder-scan") {
    set_default(a, "kind", "freq");
    ensemble::kind_from_string(a["kind"].get<std::string>());
    set_default(a, "w_grid", linspace(0.0, 1.0, 6));
    set_default(a, "n_realizations", inv.config.n_realizations);
    set_default(a, "spot_checks", 5);
    require_monotone(a["w_grid"].get<std::vector<double>>(), "disorder");
  } else if (c == "oracle" || c == "hierarchy") {
    set_default(a, "delta_grid", std::vector<double>{inv.config.delta});
    require_monotone(a["delta_grid"].get<std::vector<double>>(), "delta");
  } else if (c == "meanfield") {
    set_default(a, "delta_grid", linspace(-8.0, 8.0, 161));
    require_monotone(a["delta_grid"].get<std::vector<double>>(), "delta");
  } else {
    throw InvalidInput("unknown command '" + c + "'");
  }
  const auto& e = inv.common.engines;
  if (e.n_c < 2) throw InvalidInput("--nc must be >= 2 for g2 observables");
  if (e.oracle.n_max < 2) throw InvalidInput("--nmax must be >= 2 for g2 observables");
  if (e.oracle.total_cap < 0) throw InvalidInput("--total-cap must be >= 0");
  if (inv.common.kernels != "auto" && inv.common.kernels != "scalar" && inv.common.kernels != "avx2")
    throw InvalidInput("--kernels must be auto, scalar or avx2");
}

json invocation_to_json(const Invocation& inv) {
  return {{"command", inv.command},
          {"config", inv.config},
          {"engines", inv.common.engines},
          {"kernels", std::string(kernels::to_string(kernels::active().isa))},
          {"args", inv.args}};
}

Invocation invocation_from_json(const json& j) {
  Invocation inv;
  inv.command = j.at("command").get<std::string>();
  inv.config = j.at("config").get<RunConfig>();
  inv.common.engines = j.at("engines").get<EngineSettings>();
  inv.common.kernels = j.at("kernels").get<std::string>();
  inv.args = j.at("args");
  return inv;
}

RunReport execute(const Invocation& inv_in) {
  Invocation inv = inv_in;
  resolve_defaults(inv);
  if (inv.common.kernels == "scalar") kernels::select(kernels::Isa::Scalar);
  if (inv.common.kernels == "avx2") kernels::select(kernels::Isa::Avx2);

  const std::string started = utc_timestamp();
  RunReport report;
  std::vector<Output> outputs;
  const auto& c = inv.command;
  if (c == "sweep") {
    outputs = cmd_sweep(inv, report.summary);
  } else if (c == "compare") {
    outputs = cmd_compare(inv, report.summary);
  } else if (c == "spectrum") {
    outputs = cmd_spectrum(inv, report.summary);
  } else if (c == "disorder-scan") {
    outputs = cmd_disorder_scan(inv, report.summary);
  } else if (c == "oracle") {
    outputs = cmd_oracle(inv, report.summary);
  } else if (c == "meanfield") {
    outputs = cmd_meanfield(inv, report.summary);
  } else if (c == "hierarchy") {
    outputs = cmd_hierarchy(inv, report.summary);
  }
  const std::string finished = utc_timestamp();

  const fs::path dir(inv.common.out);
  try {
    for (const auto& o : outputs) {
      json entry = write_csv(dir, o.name, o.table);
      json manifest = {{"tool", "lieb_ss"},
                       {"version", LIEB_VERSION},
                       {"run", invocation_to_json(inv)},
                       {"seed", inv.config.seed},
                       {"threads", resolve_threads(inv.common.threads)},
                       {"started_utc", started},
                       {"finished_utc", finished},
                       {"output", entry},
                       {"summary", report.summary}};
      write_manifest(dir, o.name, manifest);
      report.outputs.push_back(entry);
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  return report;
}

ReplayReport replay(const std::string& manifest_path, const std::string& out_dir, int threads) {
  std::ifstream in(manifest_path);
  if (!in) throw InvalidInput("cannot open manifest '" + manifest_path + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw InvalidInput("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
  }
  Invocation inv;
  try {
    inv = invocation_from_json(manifest.at("run"));
  } catch (const json::exception& e) {
    throw InvalidInput("manifest '" + manifest_path + "' is incomplete: " + e.what());
  }
  inv.common.out = out_dir;
  inv.common.threads = threads;

  ReplayReport report;
  report.run = execute(inv);
  const auto& expected = manifest.at("output");
  bool found = false;
  for (const auto& o : report.run.outputs) {
    if (o.at("file") != expected.at("file")) continue;
    found = true;
    if (o.at("fnv1a64") != expected.at("fnv1a64")) {
      report.identical = false;
      report.differences.push_back({{"file", o.at("file")}, {"expected", expected.at("fnv1a64")}, {"got", o.at("fnv1a64")}});
    }
  }
  if (!found) {
    report.identical = false;
    report.differences.push_back({{"file", expected.at("file")}, {"error", "not produced"}});
  }
  return report;
}

}  // namespace lieb::app
