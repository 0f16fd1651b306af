#pragma once

// First-order machinery shared by all estimators: one-dimensional golden-section
// minimization, concave inner maximization over a ConvexSet (Frank-Wolfe when an
// exact extreme-point oracle exists, projected supergradient otherwise) and
// projected subgradient outer minimization with best-iterate tracking.
//
// Upper-bound discipline: inner maxima feeding certified risk bounds report
// value + gap, where the gap is a certified optimality gap (Frank-Wolfe gap, or
// support-based for projected supergradient), so early stopping only makes the
// certificates more conservative, never invalid.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "minimax/convex_sets.hpp"
#include "minimax/linalg.hpp"

namespace minimax {

struct SolverConfig {
  int max_iter = 2000;
  double tol_rel = 1e-8;
  int inner_max_iter = 500;
  double inner_tol = 1e-6;
  enum class Inner { Auto, FrankWolfe, ProjectedSupergradient };
  Inner inner_method = Inner::Auto;
  std::uint64_t seed = 0;

  SolverConfig() = default;
};

struct SolveReport {
  double value = 0.0;
  Vec arg;
  int iterations = 0;
  double gap_estimate = 0.0;
  bool stalled = false;
};

// ---------------------------------------------------------------- golden section

struct Golden1D {
  double x;
  double value;
};

/// Golden-section minimization of a unimodal fn on [lo, hi];
/// |x - argmin| <= tol * (hi - lo) on exit. NaN from fn is an error.
template <typename F>
inline Golden1D golden_min_1d(F fn, double lo, double hi, double tol = 1e-10) {
  if (!(lo < hi)) throw std::invalid_argument("golden_min_1d: need lo < hi");
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  auto eval = [&](double x) {
    const double v = fn(x);
    if (std::isnan(v)) throw std::runtime_error("golden_min_1d: objective returned NaN");
    return v;
  };
  double f1 = eval(x1), f2 = eval(x2);
  const int iters = std::max(
      2, static_cast<int>(std::ceil(std::log(std::max(tol, 1e-17)) / std::log(gr))));
  for (int it = 0; it < iters && (b - a) > tol * (hi - lo); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = eval(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  return {xm, eval(xm)};
}

/// Minimize fn(alpha) for alpha > 0 by golden section on ln(alpha).
/// The bracket is expanded by factors of 10 until a three-point pattern certifies
/// an interior minimum; if the objective keeps decreasing outward at both
/// expansion limits, the search reports failure (domain misuse).
template <typename F>
inline Golden1D golden_min_log(F fn, double lo, double hi, double rel_width = 1e-8,
                               double lo_limit = 1e-12, double hi_limit = 1e12) {
  auto g = [&](double t) { return fn(std::exp(t)); };
  double tl = std::log(lo), th = std::log(hi);
  // expand until the minimum is interior
  for (int guard = 0; guard < 60; ++guard) {
    const double fl = g(tl), fm = g(0.5 * (tl + th)), fh = g(th);
    const bool lo_edge = fl <= fm && tl > std::log(lo_limit);
    const bool hi_edge = fh <= fm && th < std::log(hi_limit);
    if (!lo_edge && !hi_edge) break;
    if (lo_edge) tl = std::max(tl - std::log(10.0), std::log(lo_limit));
    if (hi_edge) th = std::min(th + std::log(10.0), std::log(hi_limit));
    if (guard == 59)
      throw std::runtime_error("golden_min_log: objective decreasing outward at both limits");
  }
  Golden1D r = golden_min_1d(g, tl, th, rel_width);
  return {std::exp(r.x), r.value};
}

// ---------------------------------------------------------------- inner max

/// Concave objective with supergradient, evaluated at a point of the set.
struct ConcaveEval {
  double value;
  Vec supergrad;
};
using ConcaveOracle = std::function<ConcaveEval(const Vec&)>;

namespace detail {

inline SolveReport frank_wolfe_max(const ConcaveOracle& f, const ConvexSet& set,
                                   const SolverConfig& cfg) {
  Vec z = set.interior_point();
  SolveReport rep;
  ConcaveEval e = f(z);
  rep.value = e.value;
  rep.arg = z;
  double gap = std::numeric_limits<double>::infinity();
  int t = 0;
  for (; t < cfg.inner_max_iter; ++t) {
    const Vec s = set.linear_oracle(e.supergrad);
    Vec dir = sub(s, z);
    gap = dot(e.supergrad, dir);
    if (e.value > rep.value) {
      rep.value = e.value;
      rep.arg = z;
    }
    if (gap <= cfg.inner_tol * (1.0 + std::abs(rep.value))) break;
    // exact-ish line search along the segment; always consider the full step so
    // linear objectives land on the atom exactly
    auto along = [&](double g) {
      Vec p = z;
      axpy(g, dir, p);
      return -f(p).value;
    };
    Golden1D ls = golden_min_1d(along, 0.0, 1.0, 1e-6);
    double step = 2.0 / (static_cast<double>(t) + 2.0);
    double best_ls = -along(step);
    if (-ls.value > best_ls) {
      best_ls = -ls.value;
      step = ls.x;
    }
    if (-along(1.0) >= best_ls) step = 1.0;
    axpy(step, dir, z);
    e = f(z);
  }
  if (e.value > rep.value) {
    rep.value = e.value;
    rep.arg = z;
  }
  rep.iterations = t;
  rep.gap_estimate = std::max(gap, 0.0);
  rep.stalled = t >= cfg.inner_max_iter;
  return rep;
}

inline SolveReport projected_supergradient_max(const ConcaveOracle& f, const ConvexSet& set,
                                               const SolverConfig& cfg) {
  Vec z = set.interior_point();
  Vec zsum = z;
  SolveReport rep;
  ConcaveEval e = f(z);
  rep.value = e.value;
  rep.arg = z;
  const double diam = std::max(set.diameter_hint(), 1e-12);
  double gap = std::numeric_limits<double>::infinity();
  int t = 1;
  for (; t <= cfg.inner_max_iter; ++t) {
    // support-based certified gap: f concave => sup f <= f(z) + <g, s - z>
    const SupportResult sup = set.support(e.supergrad);
    gap = sup.value - dot(e.supergrad, z);
    if (e.value > rep.value) {
      rep.value = e.value;
      rep.arg = z;
    }
    if (gap <= cfg.inner_tol * (1.0 + std::abs(rep.value))) break;
    const double gn = norm2(e.supergrad);
    if (gn == 0.0) break;
    Vec cand = z;
    axpy(diam / (gn * std::sqrt(static_cast<double>(t))), e.supergrad, cand);
    z = set.project(cand);
    axpy(1.0, z, zsum);
    e = f(z);
  }
  // averaged iterate sometimes beats the last one on nonsmooth objectives
  Vec zavg = scaled(zsum, 1.0 / static_cast<double>(t + 1));
  zavg = set.project(zavg);
  const ConcaveEval ea = f(zavg);
  if (ea.value > rep.value) {
    rep.value = ea.value;
    rep.arg = zavg;
    const SupportResult sup = set.support(ea.supergrad);
    gap = std::min(gap, sup.value - dot(ea.supergrad, zavg));
  }
  rep.iterations = t;
  rep.gap_estimate = std::max(gap, 0.0);
  rep.stalled = t > cfg.inner_max_iter;
  return rep;
}

}  // namespace detail

/// Maximize a concave function over a ConvexSet. Frank-Wolfe with its duality gap
/// when the set has an exact extreme-point oracle, projected supergradient with a
/// support-based gap otherwise. A stalled report is still usable: arg is feasible,
/// so value is a valid lower estimate of the sup and value + gap a valid upper one.
inline SolveReport inner_max(const ConcaveOracle& f, const ConvexSet& set,
                             const SolverConfig& cfg = SolverConfig()) {
  if (set.kind() == SetKind::Singleton) {
    SolveReport rep;
    rep.arg = set.interior_point();
    rep.value = f(rep.arg).value;
    rep.iterations = 1;
    rep.gap_estimate = 0.0;
    return rep;
  }
  const bool fw = cfg.inner_method == SolverConfig::Inner::FrankWolfe ||
                  (cfg.inner_method == SolverConfig::Inner::Auto && set.exact_linear_oracle());
  return fw ? detail::frank_wolfe_max(f, set, cfg)
            : detail::projected_supergradient_max(f, set, cfg);
}

// ---------------------------------------------------------------- outer min

struct ConvexEval {
  double value;
  Vec subgrad;
};
using ConvexOracle = std::function<ConvexEval(const Vec&)>;

/// Projected subgradient descent with best-iterate tracking.
/// Polyak steps (f - lower_estimate)/||g||^2 when a lower estimate is supplied,
/// diminishing steps otherwise. projector may be empty (free minimization).
inline SolveReport outer_min(const ConvexOracle& f, Vec start,
                             const std::function<Vec(const Vec&)>& projector,
                             const SolverConfig& cfg = SolverConfig(),
                             std::optional<double> lower_estimate = std::nullopt) {
  Vec x = projector ? projector(start) : std::move(start);
  ConvexEval e = f(x);
  SolveReport rep;
  rep.value = e.value;
  rep.arg = x;
  int last_improve = 0;
  double step0 = 0.0;
  for (int t = 1; t <= cfg.max_iter; ++t) {
    const double gn = norm2(e.subgrad);
    if (gn <= 1e-15) {
      rep.iterations = t;
      return rep;
    }
    double step;
    if (lower_estimate) {
      step = (e.value - *lower_estimate) / (gn * gn);
      if (step <= 0.0) break;  // at or below the lower estimate already
    } else {
      if (step0 == 0.0) step0 = (1.0 + std::abs(e.value)) / gn;
      step = step0 / (gn * std::sqrt(static_cast<double>(t)));
    }
    axpy(-step, e.subgrad, x);
    if (projector) x = projector(x);
    e = f(x);
    if (e.value < rep.value - 1e-14 * (1.0 + std::abs(rep.value))) {
      rep.value = e.value;
      rep.arg = x;
      last_improve = t;
    }
    rep.iterations = t;
  }
  rep.stalled = last_improve < cfg.max_iter - cfg.max_iter / 4;
  return rep;
}

// ---------------------------------------------------------------- exact box max

/// Exact maximization over a box of  phi(m0 + <m, x>) + <lin, x>  for a concave
/// increasing scalar phi (the sqrt-of-affine shapes of the closed-form risk
/// objectives). One-dimensional golden section over s = m0 + <m, x>, with the
/// inner linear program solved exactly by multiplier bisection.
struct BoxConcaveResult {
  double value;
  Vec argmax;
};

template <typename Phi>
inline BoxConcaveResult max_box_affine_plus_concave(const Vec& lo, const Vec& hi, const Vec& lin,
                                                    const Vec& m, double m0, Phi phi) {
  const std::size_t n = lo.size();
  check_same_dim(lin.size(), n, "max_box_affine_plus_concave");
  check_same_dim(m.size(), n, "max_box_affine_plus_concave");

  double s_min = m0, s_max = m0;
  for (std::size_t j = 0; j < n; ++j) {
    s_min += m[j] * (m[j] > 0.0 ? lo[j] : hi[j]);
    s_max += m[j] * (m[j] > 0.0 ? hi[j] : lo[j]);
  }

  // x(mu): coordinatewise maximizer of <lin + mu m, x>; <m, x(mu)> is nondecreasing in mu
  auto x_of_mu = [&](double mu) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = (lin[j] + mu * m[j] > 0.0) ? hi[j] : lo[j];
    return x;
  };
  auto lp = [&](double s) {
    // max <lin, x> subject to <m, x> = s - m0 over the box
    const double target = s - m0;
    double mu_lo = -1.0, mu_hi = 1.0;
    auto mval = [&](double mu) { return dot(m, x_of_mu(mu)); };
    for (int guard = 0; guard < 200 && mval(mu_lo) > target; ++guard) mu_lo *= 2.0;
    for (int guard = 0; guard < 200 && mval(mu_hi) < target; ++guard) mu_hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (mu_lo + mu_hi);
      (mval(mid) < target ? mu_lo : mu_hi) = mid;
    }
    const double mu = mu_hi;
    Vec x = x_of_mu(mu);
    // coordinates at the crossing get a fractional allocation to hit the target
    double resid = target - dot(m, x);
    for (std::size_t j = 0; j < n && std::abs(resid) > 0.0; ++j) {
      if (m[j] == 0.0) continue;
      const double room_lo = (lo[j] - x[j]) * m[j];
      const double room_hi = (hi[j] - x[j]) * m[j];
      const double lo_room = std::min(room_lo, room_hi), hi_room = std::max(room_lo, room_hi);
      const double take = std::clamp(resid, lo_room, hi_room);
      if (take != 0.0) {
        x[j] += take / m[j];
        resid -= take;
      }
    }
    return std::pair<double, Vec>(dot(lin, x), std::move(x));
  };

  if (s_max - s_min <= 1e-300) {
    auto [lv, lx] = lp(s_min);
    return {phi(s_min) + lv, std::move(lx)};
  }
  auto objective = [&](double s) { return -(phi(s) + lp(s).first); };
  Golden1D g = golden_min_1d(objective, s_min, s_max, 1e-12);
  auto [lv, lx] = lp(g.x);
  return {phi(g.x) + lv, std::move(lx)};
}

}  // namespace minimax
