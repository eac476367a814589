#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lieb {

using cplx = std::complex<double>;

inline constexpr std::size_t kNumSites = 6;
inline constexpr std::size_t kNumEdges = 6;

// Canonical site ordering (a1, b1, c1, a2, b2, c2); every engine indexes sites this way.
enum class Site : int { A1 = 0, B1 = 1, C1 = 2, A2 = 3, B2 = 4, C2 = 5 };

constexpr std::size_t index(Site s) { return static_cast<std::size_t>(s); }

std::string_view site_name(Site s);
Site site_from_name(std::string_view name);

using SiteArray = std::array<double, kNumSites>;
using SiteArrayC = std::array<cplx, kNumSites>;
using EdgeArray = std::array<double, kNumEdges>;

// Exponent / occupation vector over the six sites.
using Occupation = std::array<std::uint8_t, kNumSites>;

using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
using SparseRowOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a requested truncation would not fit the configured memory budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, std::size_t required_bytes, std::size_t budget_bytes)
      : std::runtime_error(what), required_bytes_(required_bytes), budget_bytes_(budget_bytes) {}
  std::size_t required_bytes() const { return required_bytes_; }
  std::size_t budget_bytes() const { return budget_bytes_; }

 private:
  std::size_t required_bytes_;
  std::size_t budget_bytes_;
};

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{3} << 30;

}  // namespace lieb
