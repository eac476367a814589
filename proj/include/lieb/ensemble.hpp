#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "lieb/model.hpp"

namespace lieb::ensemble {

enum class DisorderKind { Frequency, Hopping };

std::string_view to_string(DisorderKind kind);
DisorderKind kind_from_string(std::string_view name);  // "freq" / "frequency" / "hop" / "hopping"

struct EnsembleConfig {
  int n_realizations = 200;
  std::vector<double> w_grid;
  DisorderKind kind = DisorderKind::Frequency;
  std::uint64_t master_seed = 0;
  void validate() const;
};

// Each xi is drawn from a generator keyed by (master_seed, kind, w_index, index, slot), so a
// realization does not depend on execution order. Slots 0..5 are sites, 6..11 edges.
model::DisorderRealization sample_realization(const EnsembleConfig& config, std::size_t w_index, std::size_t index);

// Uniform on [-1/2, 1/2) from a 64-bit word.
double unit_shift(std::uint64_t word);
double keyed_shift(std::uint64_t master_seed, DisorderKind kind, std::size_t w_index, std::size_t index,
                   std::size_t slot);

inline constexpr std::size_t kNumObservables = 5;
inline constexpr std::array<std::string_view, kNumObservables> kObservableNames = {"g2_11", "g2_22", "g2_12",
                                                                                    "n_b1", "n_b2"};
using ObservableArray = std::array<double, kNumObservables>;

// Throws or returns non-finite values on failure.
using RealizationSolver = std::function<ObservableArray(const model::DisorderRealization&)>;

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};

// Neumaier-compensated mean and two-pass sample standard deviation. Values equal to the
// first one contribute exactly zero, so identical inputs give std = 0 exactly.
Summary summarize(const std::vector<double>& values);

inline constexpr double kMaxFailureFraction = 0.05;

struct WPoint {
  double w = 0.0;
  std::array<Summary, kNumObservables> stats{};
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  bool valid = true;  // false when more than 5% of realizations failed
  std::vector<std::string> failures;  // first few messages
  std::vector<ObservableArray> samples;  // per realization, failed ones omitted
};

struct EnsembleStats {
  EnsembleConfig config;
  std::vector<WPoint> points;
};

// Failed realizations are excluded and counted, never redrawn.
EnsembleStats run_ensemble(const EnsembleConfig& config, const RealizationSolver& solver, int threads = 0);

}  // namespace lieb::ensemble
