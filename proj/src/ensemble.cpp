#include "lieb/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lieb/parallel.hpp"

namespace lieb::ensemble {

std::string_view to_string(DisorderKind kind) { return kind == DisorderKind::Frequency ? "freq" : "hop"; }

DisorderKind kind_from_string(std::string_view name) {
  if (name == "freq" || name == "frequency") return DisorderKind::Frequency;
  if (name == "hop" || name == "hopping") return DisorderKind::Hopping;
  throw InvalidInput("unknown disorder kind '" + std::string(name) + "' (expected freq or hop)");
}

void EnsembleConfig::validate() const {
  if (n_realizations < 1) throw InvalidInput("n_realizations must be >= 1");
  if (w_grid.empty()) throw InvalidInput("disorder grid is empty");
  for (double w : w_grid) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("disorder strengths must be finite and >= 0");
  }
}

double unit_shift(std::uint64_t word) { return static_cast<double>(word >> 11) * 0x1.0p-53 - 0.5; }

double keyed_shift(std::uint64_t master_seed, DisorderKind kind, std::size_t w_index, std::size_t index,
                   std::size_t slot) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(w_index),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(slot)};
  std::mt19937_64 gen(seq);
  return unit_shift(gen());
}

model::DisorderRealization sample_realization(const EnsembleConfig& config, std::size_t w_index, std::size_t index) {
  if (w_index >= config.w_grid.size()) throw InvalidInput("disorder grid index out of range");
  if (index >= static_cast<std::size_t>(config.n_realizations)) throw InvalidInput("realization index out of range");
  model::DisorderRealization r;
  r.seed = config.master_seed;
  const double w = config.w_grid[w_index];
  if (config.kind == DisorderKind::Frequency) {
    r.w_freq = w;
    for (std::size_t s = 0; s < kNumSites; ++s)
      r.site_shifts[s] = keyed_shift(config.master_seed, config.kind, w_index, index, s);
  } else {
    r.w_hop = w;
    for (std::size_t e = 0; e < kNumEdges; ++e)
      r.edge_shifts[e] = keyed_shift(config.master_seed, config.kind, w_index, index, kNumSites + e);
  }
  return r;
}

namespace {

struct Neumaier {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.std = s.stderr_mean = std::nan("");
    return s;
  }
  const double shift = values.front();
  Neumaier acc;
  for (double v : values) acc.add(v - shift);
  const double centred_mean = acc.value() / static_cast<double>(values.size());
  s.mean = shift + centred_mean;
  if (values.size() > 1) {
    Neumaier sq;
    for (double v : values) {
      const double d = (v - shift) - centred_mean;
      sq.add(d * d);
    }
    s.std = std::sqrt(sq.value() / static_cast<double>(values.size() - 1));
  }
  s.stderr_mean = s.std / std::sqrt(static_cast<double>(values.size()));
  return s;
}

EnsembleStats run_ensemble(const EnsembleConfig& config, const RealizationSolver& solver, int threads) {
  config.validate();
  EnsembleStats stats;
  stats.config = config;
  const std::size_t nw = config.w_grid.size();
  const auto nr = static_cast<std::size_t>(config.n_realizations);

  struct Outcome {
    bool ok = false;
    ObservableArray values{};
    std::string error;
  };
  std::vector<Outcome> outcomes(nw * nr);
  parallel_for(nw * nr, threads, [&](std::size_t job) {
    const std::size_t wi = job / nr;
    const std::size_t ri = job % nr;
    Outcome& out = outcomes[job];
    try {
      out.values = solver(sample_realization(config, wi, ri));
      out.ok = std::all_of(out.values.begin(), out.values.end(), [](double v) { return std::isfinite(v); });
      if (!out.ok) out.error = "non-finite observable";
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  for (std::size_t wi = 0; wi < nw; ++wi) {
    WPoint pt;
    pt.w = config.w_grid[wi];
    std::array<std::vector<double>, kNumObservables> columns;
    for (std::size_t ri = 0; ri < nr; ++ri) {
      const Outcome& o = outcomes[wi * nr + ri];
      if (!o.ok) {
        ++pt.n_failed;
        if (pt.failures.size() < 5) pt.failures.push_back("realization " + std::to_string(ri) + ": " + o.error);
        continue;
      }
      ++pt.n_ok;
      pt.samples.push_back(o.values);
      for (std::size_t k = 0; k < kNumObservables; ++k) columns[k].push_back(o.values[k]);
    }
    for (std::size_t k = 0; k < kNumObservables; ++k) pt.stats[k] = summarize(columns[k]);
    pt.valid = static_cast<double>(pt.n_failed) <= kMaxFailureFraction * static_cast<double>(nr);
    stats.points.push_back(std::move(pt));
  }
  return stats;
}

}  // namespace lieb::ensemble
