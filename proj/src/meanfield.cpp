#include "lieb/meanfield.hpp"

#include <algorithm>
#include <cmath>

namespace lieb::meanfield {

namespace {

using Vec6 = Eigen::Matrix<cplx, 6, 1>;
using Mat6 = Eigen::Matrix<cplx, 6, 6>;

Mat6 hopping_matrix(const model::ResolvedLattice& lattice) {
  Mat6 m = Mat6::Zero();
  const auto& graph = model::build_lattice();
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const auto s = index(graph.edges[e].first);
    const auto r = index(graph.edges[e].second);
    m(s, r) -= lattice.hopping[e];
    m(r, s) -= lattice.hopping[e];
  }
  return m;
}

double max_abs(const SiteArrayC& v) {
  double m = 0.0;
  for (auto z : v) m = std::max(m, std::abs(z));
  return m;
}

double distance(const SiteArrayC& a, const SiteArrayC& b) {
  double m = 0.0;
  for (std::size_t s = 0; s < kNumSites; ++s) m = std::max(m, std::abs(a[s] - b[s]));
  return m;
}

}  // namespace

SiteArrayC linear_solution(const model::ResolvedLattice& lattice) {
  Mat6 m = hopping_matrix(lattice);
  Vec6 f;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    m(s, s) += cplx{-lattice.detuning[s], -0.5 * lattice.gamma};
    f(s) = lattice.drive[s];
  }
  const Vec6 a = m.partialPivLu().solve(-f);
  SiteArrayC out;
  for (std::size_t s = 0; s < kNumSites; ++s) out[s] = a(s);
  return out;
}

SiteArrayC gp_rhs(const model::ResolvedLattice& lattice, const SiteArrayC& alpha) {
  const auto& graph = model::build_lattice();
  SiteArrayC out;
  for (std::size_t s = 0; s < kNumSites; ++s) {
    out[s] = cplx{-lattice.detuning[s] + lattice.u * std::norm(alpha[s]), -0.5 * lattice.gamma} * alpha[s] +
             lattice.drive[s];
  }
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const auto s = index(graph.edges[e].first);
    const auto r = index(graph.edges[e].second);
    out[s] -= lattice.hopping[e] * alpha[r];
    out[r] -= lattice.hopping[e] * alpha[s];
  }
  return out;
}

CoherentField gp_newton(const model::ResolvedLattice& lattice, const SiteArrayC& seed, const GpOptions& opts) {
  const Mat6 hop = hopping_matrix(lattice);
  CoherentField field;
  field.alpha = seed;
  SiteArrayC f = gp_rhs(lattice, field.alpha);
  double res = max_abs(f);
  for (int it = 0; it < opts.max_newton && res >= opts.tolerance; ++it) {
    field.iterations = it + 1;
    // delta f = A delta alpha + B conj(delta alpha), split into real and imaginary parts.
    Mat6 a = hop;
    Mat6 b = Mat6::Zero();
    for (std::size_t s = 0; s < kNumSites; ++s) {
      a(s, s) += cplx{-lattice.detuning[s] + 2.0 * lattice.u * std::norm(field.alpha[s]), -0.5 * lattice.gamma};
      b(s, s) = lattice.u * field.alpha[s] * field.alpha[s];
    }
    Eigen::Matrix<double, 12, 12> jac;
    jac.topLeftCorner<6, 6>() = (a + b).real();
    jac.topRightCorner<6, 6>() = -(a - b).imag();
    jac.bottomLeftCorner<6, 6>() = (a + b).imag();
    jac.bottomRightCorner<6, 6>() = (a - b).real();
    Eigen::Matrix<double, 12, 1> rhs;
    for (std::size_t s = 0; s < kNumSites; ++s) {
      rhs(s) = -f[s].real();
      rhs(s + 6) = -f[s].imag();
    }
    const Eigen::Matrix<double, 12, 1> step = jac.fullPivLu().solve(rhs);
    if (!step.allFinite()) break;

    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      SiteArrayC trial = field.alpha;
      for (std::size_t s = 0; s < kNumSites; ++s) trial[s] += lambda * cplx{step(s), step(s + 6)};
      const SiteArrayC ft = gp_rhs(lattice, trial);
      const double rt = max_abs(ft);
      if (rt < res || rt < opts.tolerance) {
        field.alpha = trial;
        f = ft;
        res = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  field.residual = res;
  field.converged = res < opts.tolerance;
  return field;
}

CoherentField gp_pseudo_time(const model::ResolvedLattice& lattice, const SiteArrayC& start, const GpOptions& opts) {
  double scale = lattice.gamma;
  for (auto d : lattice.detuning) scale = std::max(scale, std::abs(d));
  double jmax = 0.0;
  for (auto j : lattice.hopping) jmax = std::max(jmax, std::abs(j));
  scale += 3.0 * jmax + lattice.u;
  const double dt = 0.1 / scale;

  auto deriv = [&](const SiteArrayC& a) {
    SiteArrayC d = gp_rhs(lattice, a);
    for (auto& z : d) z *= cplx{0.0, -1.0};
    return d;
  };
  auto axpy = [](const SiteArrayC& y, double h, const SiteArrayC& k) {
    SiteArrayC out;
    for (std::size_t s = 0; s < kNumSites; ++s) out[s] = y[s] + h * k[s];
    return out;
  };

  SiteArrayC a = start;
  int steps = 0;
  for (double t = 0.0; t < opts.t_max; t += dt, ++steps) {
    // The intensity-dependent shift can grow; keep the step inside the RK4 stability region.
    double local = scale;
    for (auto z : a) local = std::max(local, scale + 2.0 * lattice.u * std::norm(z));
    const double h = dt * scale / local;
    const SiteArrayC k1 = deriv(a);
    if (steps % 50 == 0 && max_abs(k1) < 1e-8) break;
    const SiteArrayC k2 = deriv(axpy(a, 0.5 * h, k1));
    const SiteArrayC k3 = deriv(axpy(a, 0.5 * h, k2));
    const SiteArrayC k4 = deriv(axpy(a, h, k3));
    for (std::size_t s = 0; s < kNumSites; ++s) a[s] += h / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
    if (!std::isfinite(std::abs(a[0]))) break;
  }
  CoherentField field = gp_newton(lattice, a, opts);
  field.iterations += steps;
  return field;
}

CoherentField gp_steady_state(const model::ResolvedLattice& lattice, const GpOptions& opts) {
  CoherentField newton = gp_newton(lattice, linear_solution(lattice), opts);
  CoherentField relaxed = gp_pseudo_time(lattice, SiteArrayC{}, opts);
  if (!newton.converged) return relaxed;
  if (relaxed.converged && distance(newton.alpha, relaxed.alpha) > opts.distinct) {
    newton.bistable = true;
    newton.alternatives.push_back(relaxed.alpha);
  }
  return newton;
}

std::vector<SweepPoint> gp_sweep(const std::vector<model::ResolvedLattice>& points, const GpOptions& opts) {
  std::vector<SweepPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    SweepPoint pt;
    if (i == 0) {
      pt.field = gp_steady_state(points[i], opts);
    } else {
      pt.field = gp_newton(points[i], out.back().field.alpha, opts);
      if (!pt.field.converged) pt.field = gp_steady_state(points[i], opts);
      const auto& prev = out.back().field.alpha;
      const double ref = std::max({max_abs(prev), max_abs(pt.field.alpha), 1e-12});
      pt.branch_jump = distance(prev, pt.field.alpha) / ref > kBranchJumpThreshold;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<SweepPoint> gp_density_sweep(const model::ModelParams& params, const std::vector<double>& deltas,
                                         const model::DisorderRealization& disorder, const GpOptions& opts) {
  std::vector<model::ResolvedLattice> points;
  points.reserve(deltas.size());
  for (double d : deltas) {
    model::ModelParams p = params;
    p.delta = d;
    points.push_back(model::resolve(p, disorder));
  }
  return gp_sweep(points, opts);
}

}  // namespace lieb::meanfield
