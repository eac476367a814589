#include "lieb/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lieb/ensemble.hpp"

namespace lieb::app {

model::ModelParams RunConfig::params() const {
  model::ModelParams p;
  p.delta = delta;
  p.u = u;
  p.j = j;
  p.f = {f_re, f_im};
  p.gamma = gamma;
  return p;
}

model::DisorderRealization RunConfig::realization() const {
  model::DisorderRealization r;
  r.seed = seed;
  r.w_freq = w_freq;
  r.w_hop = w_hop;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    r.site_shifts[s] = ensemble::keyed_shift(seed, ensemble::DisorderKind::Frequency, 0, 0, s);
  }
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    r.edge_shifts[e] = ensemble::keyed_shift(seed, ensemble::DisorderKind::Hopping, 0, 0, kNumSites + e);
  }
  if (w_freq == 0.0) r.site_shifts = {};
  if (w_hop == 0.0) r.edge_shifts = {};
  return r;
}

void RunConfig::validate() const {
  params().validate();
  if (!(w_freq >= 0.0) || !(w_hop >= 0.0)) throw InvalidInput("w_freq and w_hop must be >= 0");
  if (n_realizations < 1) throw InvalidInput("n_realizations must be >= 1");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"delta", c.delta}, {"u", c.u},       {"j", c.j},           {"f_re", c.f_re},
                     {"f_im", c.f_im},   {"gamma", c.gamma}, {"w_freq", c.w_freq}, {"w_hop", c.w_hop},
                     {"seed", c.seed},   {"n_realizations", c.n_realizations}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  static const char* known[] = {"delta", "u", "j", "f_re", "f_im", "gamma", "w_freq", "w_hop", "seed", "n_realizations"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw InvalidInput("unknown config key '" + key + "'");
  }
  auto number = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw InvalidInput(std::string("config key '") + key + "' must be a number");
    dst = j[key].get<double>();
    if (!std::isfinite(dst)) throw InvalidInput(std::string("config key '") + key + "' must be finite");
  };
  number("delta", c.delta);
  number("u", c.u);
  number("j", c.j);
  number("f_re", c.f_re);
  number("f_im", c.f_im);
  number("gamma", c.gamma);
  number("w_freq", c.w_freq);
  number("w_hop", c.w_hop);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw InvalidInput("config key 'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("n_realizations")) {
    if (!j["n_realizations"].is_number_integer()) throw InvalidInput("config key 'n_realizations' must be an integer");
    c.n_realizations = j["n_realizations"].get<int>();
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config file '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig c = j.get<RunConfig>();
  c.validate();
  return c;
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw InvalidInput("grid needs at least one point");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  if (n > 1) out.back() = b;
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidInput("cannot parse grid value '" + s + "' in '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw InvalidInput("cannot parse grid value '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<std::string> parts;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  if (sep == ':') {
    if (parts.size() != 3) throw InvalidInput("range grid must be start:stop:count, got '" + text + "'");
    const double count = to_double(parts[2]);
    if (count < 1 || count != std::floor(count)) throw InvalidInput("grid count must be a positive integer");
    return linspace(to_double(parts[0]), to_double(parts[1]), static_cast<int>(count));
  }
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(to_double(p));
  if (out.empty()) throw InvalidInput("grid is empty");
  return out;
}

void require_monotone(const std::vector<double>& grid, const std::string& name) {
  if (grid.empty()) throw InvalidInput(name + " grid is empty");
  if (grid.size() < 2) return;
  const bool up = grid[1] > grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
      throw InvalidInput(name + " grid must be strictly monotone");
  }
}

}  // namespace lieb::app
