#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace lieb::app {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floats with 17 significant digits, so values round-trip exactly.
std::string format_double(double v);

using Cell = std::variant<double, long long, std::string>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<Cell> row);  // throws if the width does not match the header
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

std::string utc_timestamp();

// Writes <dir>/<name>.csv. Returns the manifest entry {file, rows, fnv1a64}.
nlohmann::json write_csv(const std::filesystem::path& dir, const std::string& name, const CsvTable& table);

// Writes <dir>/<name>.manifest.json.
void write_manifest(const std::filesystem::path& dir, const std::string& name, const nlohmann::json& manifest);

}  // namespace lieb::app
