#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lieb/kernels.hpp"
#include "lieb/types.hpp"

namespace lieb::linalg {

using Vector = Eigen::VectorXcd;
using LinearOp = std::function<void(const Vector& in, Vector& out)>;

struct GmresOptions {
  double tolerance = 1e-12;  // on ||b - A x|| / ||b||
  int restart = 30;
  int max_iterations = 2000;
  // Test ||b - A x|| against tolerance * max(||b||, ||x||), with ||x|| taken at each restart.
  bool relative_to_solution = false;
};

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Right-preconditioned restarted GMRES: solves A x = b with x = M^{-1} y. `x` holds
// the initial guess on entry. Inner products go through the active kernel table.
inline GmresResult gmres(const LinearOp& apply_a, const LinearOp& apply_precond, const Vector& b, Vector& x,
                         const GmresOptions& opts) {
  const auto& k = kernels::active();
  const std::size_t n = static_cast<std::size_t>(b.size());
  auto norm = [&](const Vector& v) { return std::sqrt(k.cnorm2(n, v.data())); };

  const double bnorm = norm(b) > 0.0 ? norm(b) : 1.0;
  const int m = std::max(1, opts.restart);
  GmresResult result;

  Vector r(b.size());
  Vector w(b.size());
  Vector z(b.size());
  std::vector<Vector> basis;
  basis.reserve(m + 1);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
  std::vector<cplx> cs(m), sn(m), g(m + 1);

  while (true) {
    apply_a(x, r);
    r = b - r;
    double beta = norm(r);
    const double scale = opts.relative_to_solution ? std::max(bnorm, norm(x)) : bnorm;
    result.relative_residual = beta / scale;
    if (result.relative_residual <= opts.tolerance) {
      result.converged = true;
      return result;
    }
    if (result.iterations >= opts.max_iterations) return result;

    basis.clear();
    basis.emplace_back(r / beta);
    h.setZero();
    std::fill(g.begin(), g.end(), cplx{});
    g[0] = beta;

    int j = 0;
    for (; j < m && result.iterations < opts.max_iterations; ++j) {
      ++result.iterations;
      apply_precond(basis[j], z);
      apply_a(z, w);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; ++i) {
        const cplx hij = k.cdotc(n, basis[i].data(), w.data());
        h(i, j) = hij;
        k.caxpy(n, -hij, basis[i].data(), w.data());
      }
      const double hnext = norm(w);
      h(j + 1, j) = hnext;
      for (int i = 0; i < j; ++i) {
        const cplx t = std::conj(cs[i]) * h(i, j) + std::conj(sn[i]) * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(std::abs(h(j, j)), hnext);
      cs[j] = denom == 0.0 ? cplx{1.0} : h(j, j) / denom;
      sn[j] = denom == 0.0 ? cplx{0.0} : cplx{hnext / denom};
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      if (std::abs(g[j + 1]) / scale <= opts.tolerance || hnext == 0.0) {
        ++j;
        break;
      }
      basis.emplace_back(w / hnext);
    }

    // Back substitution on the j x j triangle, then x += M^{-1} V y.
    Eigen::VectorXcd y(j);
    for (int i = j - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int l = i + 1; l < j; ++l) s -= h(i, l) * y(l);
      y(i) = s / h(i, i);
    }
    w.setZero();
    for (int i = 0; i < j; ++i) k.caxpy(n, y(i), basis[i].data(), w.data());
    apply_precond(w, z);
    x += z;
  }
}

}  // namespace lieb::linalg
