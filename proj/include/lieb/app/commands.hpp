#pragma once

#include <string>

#include <json.hpp>

#include "lieb/app/config.hpp"
#include "lieb/app/engines.hpp"

namespace lieb::app {

struct Common {
  std::string out = "out";
  int threads = 0;
  EngineSettings engines;
  std::string kernels = "auto";  // auto | scalar | avx2
};

// A fully resolved run: everything needed to reproduce its outputs.
struct Invocation {
  std::string command;
  RunConfig config;
  Common common;
  nlohmann::json args = nlohmann::json::object();
};

struct RunReport {
  nlohmann::json outputs = nlohmann::json::array();  // {file, rows, fnv1a64}
  nlohmann::json summary = nlohmann::json::object();
};

// Fills in defaults for missing command arguments (grids etc.). Throws InvalidInput.
void resolve_defaults(Invocation& inv);

// Runs the command, writes CSV files plus one manifest per file under common.out.
RunReport execute(const Invocation& inv);

nlohmann::json invocation_to_json(const Invocation& inv);
Invocation invocation_from_json(const nlohmann::json& j);

// Reads a manifest, re-runs it into out_dir and compares output hashes.
struct ReplayReport {
  bool identical = true;
  nlohmann::json differences = nlohmann::json::array();
  RunReport run;
};
ReplayReport replay(const std::string& manifest_path, const std::string& out_dir, int threads);

}  // namespace lieb::app
