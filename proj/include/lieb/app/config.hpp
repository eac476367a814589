#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lieb/model.hpp"

namespace lieb::app {

// Contents of a --config document. Unknown keys are rejected.
struct RunConfig {
  double delta = 0.0;
  double u = 0.1;
  double j = 3.0;
  double f_re = 0.5;
  double f_im = 0.0;
  double gamma = 1.0;
  double w_freq = 0.0;
  double w_hop = 0.0;
  std::uint64_t seed = 0;
  int n_realizations = 200;

  model::ModelParams params() const;
  // Disorder for single-point commands: realization 0 of the keyed generator for `seed`.
  model::DisorderRealization realization() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_config(const std::string& path);

// "a:b:n" (n evenly spaced points, endpoints included) or "v1,v2,...". Throws InvalidInput.
std::vector<double> parse_grid(const std::string& text);
void require_monotone(const std::vector<double>& grid, const std::string& name);
std::vector<double> linspace(double a, double b, int n);

}  // namespace lieb::app
