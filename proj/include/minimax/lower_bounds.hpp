#pragma once

// Numerical minimax lower bounds.
//
// Energy estimation: two spherically symmetric observation laws (radius r_chi
// signal + N(0, sigma_chi^2 I) noise) are statistically indistinguishable at
// total risk 2 eps when the overlap integral of their energy densities exceeds
// 2 eps; then (r2^2 - r1^2)/2 lower-bounds the minimax eps-risk. The energy
// density is a scaled noncentral chi-square evaluated by outward summation from
// the Poisson peak.
//
// Indirect observations: a signal w and its shrinkage theta(w) w are
// indistinguishable when ||Pw - P(theta w)|| <= 2 sigma q_N(1-eps), giving the
// lower bound max_w ||w||^2 (1 - theta(w)^2)/2 over the signal ellipsoid; the
// maximization is nonconvex and is probed suboptimally (any feasible w certifies).

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "minimax/convex_sets.hpp"
#include "minimax/linalg.hpp"
#include "minimax/rng.hpp"

namespace minimax {

// ---------------------------------------------------------------- normal

inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse standard normal CDF, rational approximation polished by one Newton
/// step on the erfc-based CDF; absolute error well below 1e-9.
inline double gauss_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("gauss_quantile: p must lie in (0,1)");
  // Acklam's coefficients
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Newton step on the CDF
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 1e-300) x -= (gauss_cdf(x) - p) / pdf;
  return x;
}

// ---------------------------------------------------------------- incomplete gamma

namespace detail {

/// Regularized lower incomplete gamma P(a, x); series for x < a+1, Lentz
/// continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lpre = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 100000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return std::min(1.0, std::exp(lpre) * sum);
  }
  // continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::max(0.0, 1.0 - std::exp(lpre) * h);
}

}  // namespace detail

// ---------------------------------------------------------------- noncentral chi2

/// Density of the noncentral chi-square with k degrees of freedom and
/// noncentrality lambda, by outward summation from the Poisson peak; terms are
/// dropped once below 1e-15 of the running sum.
inline double nc_chisq_pdf(double x, double k, double lambda) {
  if (x < 0.0) return 0.0;
  auto central = [](double xx, double nu) {
    if (xx == 0.0) {
      if (nu == 2.0) return 0.5;
      return nu > 2.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::exp((0.5 * nu - 1.0) * std::log(0.5 * xx) - 0.5 * xx - std::lgamma(0.5 * nu)) *
           0.5;
  };
  if (lambda < 1e-12) return central(x, k);
  if (x == 0.0) {
    if (k == 2.0) return 0.5 * std::exp(-0.5 * lambda);
    return k > 2.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  const double m = 0.5 * lambda, y = 0.5 * x;
  const long j0 = std::max(0L, static_cast<long>(m));
  // t_j = pois(j; m) * f_central(x; k + 2j)
  const double log_t0 = -m + j0 * std::log(m) - std::lgamma(j0 + 1.0) +
                        (0.5 * k + j0 - 1.0) * std::log(y) - y - std::lgamma(0.5 * k + j0) -
                        std::log(2.0);
  const double t0 = std::exp(log_t0);
  double sum = t0;
  double t = t0;
  for (long j = j0; j < j0 + 100000000L; ++j) {  // upward
    t *= (m / (j + 1.0)) * (y / (0.5 * k + j));
    sum += t;
    if (t < 1e-15 * sum) break;
  }
  t = t0;
  for (long j = j0; j > 0; --j) {  // downward
    t *= (static_cast<double>(j) / m) * ((0.5 * k + j - 1.0) / y);
    sum += t;
    if (t < 1e-15 * sum) break;
  }
  return sum;
}

/// CDF of the noncentral chi-square, Poisson mixture of regularized incomplete
/// gammas with two-directional recurrences from the peak.
inline double nc_chisq_cdf(double x, double k, double lambda) {
  if (x <= 0.0) return 0.0;
  if (lambda < 1e-12) return detail::gamma_p(0.5 * k, 0.5 * x);
  const double m = 0.5 * lambda, y = 0.5 * x;
  const long j0 = std::max(0L, static_cast<long>(m));
  const double log_p0 = -m + j0 * std::log(m) - std::lgamma(j0 + 1.0);
  const double p0 = std::exp(log_p0);
  const double a0 = 0.5 * k + j0;
  double t0 = detail::gamma_p(a0, y);
  // D_j = y^{a_j} e^{-y} / Gamma(a_j + 1)
  double d0 = std::exp(a0 * std::log(y) - y - std::lgamma(a0 + 1.0));
  double sum = p0 * t0, psum = p0;
  {  // upward: T_{j+1} = T_j - D_j, D_{j+1} = D_j y/(a_j+1)
    double p = p0, tj = t0, dj = d0;
    for (long j = j0; j < j0 + 100000000L; ++j) {
      tj = std::max(0.0, tj - dj);
      dj *= y / (0.5 * k + j + 1.0);
      p *= m / (j + 1.0);
      sum += p * tj;
      psum += p;
      if (psum > 1.0 - 1e-15 || p < 1e-18) break;
    }
  }
  {  // downward: D_{j-1} = D_j (a_j)/y, T_{j-1} = T_j + D_{j-1}
    double p = p0, tj = t0, dj = d0;
    for (long j = j0; j > 0; --j) {
      dj *= (0.5 * k + j) / y;  // now D_{j-1}
      tj = std::min(1.0, tj + dj);
      p *= static_cast<double>(j) / m;
      sum += p * tj;
      psum += p;
      if (psum > 1.0 - 1e-15 || p < 1e-18) break;
    }
  }
  // the unsummed Poisson tail contributes at most (1 - psum) <= 1e-15
  return std::clamp(sum, 0.0, 1.0);
}

/// Quantile by bisection on the numeric CDF.
inline double nc_chisq_quantile(double p, double k, double lambda) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("nc_chisq_quantile: p in (0,1) required");
  double hi = k + lambda + 10.0;
  while (nc_chisq_cdf(hi, k, lambda) < p && hi < 1e18) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (nc_chisq_cdf(mid, k, lambda) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------- energy density

/// Density at s of ||eta + xi||^2 with eta uniform on the radius-r sphere in R^m
/// and xi ~ N(0, sigma^2 I_m): sigma^2-scaled noncentral chi-square, m degrees of
/// freedom, noncentrality (r/sigma)^2.
inline double energy_density(double s, int m, double r, double sigma) {
  if (s < 0.0 || m < 1 || r < 0.0 || sigma <= 0.0)
    throw std::domain_error("energy_density: bad arguments");
  const double s2 = sigma * sigma;
  return nc_chisq_pdf(s / s2, static_cast<double>(m), (r * r) / s2) / s2;
}

inline double energy_cdf(double s, int m, double r, double sigma) {
  const double s2 = sigma * sigma;
  return nc_chisq_cdf(s / s2, static_cast<double>(m), (r * r) / s2);
}

inline double energy_quantile(double p, int m, double r, double sigma) {
  const double s2 = sigma * sigma;
  return s2 * nc_chisq_quantile(p, static_cast<double>(m), (r * r) / s2);
}

// ---------------------------------------------------------------- quadrature

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || !std::isfinite(left + right)) return left + right;
  if (std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-6, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Overlap integral of the two energy densities: integral of min(q1, q2) over
/// [0, S_max], S_max the larger 0.999999-quantile (bisection on the numeric CDF);
/// adaptive Simpson with absolute tolerance 1e-6.
inline double overlap(int m, double r1, double sigma1, double r2, double sigma2,
                      double tol = 1e-6) {
  const double smax =
      std::max(energy_quantile(0.999999, m, r1, sigma1), energy_quantile(0.999999, m, r2, sigma2));
  const double smin =
      std::max(0.0, std::min(energy_quantile(1e-9, m, r1, sigma1),
                             energy_quantile(1e-9, m, r2, sigma2)));
  auto f = [&](double s) {
    return std::min(energy_density(s, m, r1, sigma1), energy_density(s, m, r2, sigma2));
  };
  return adaptive_simpson(f, smin, smax, tol);
}

// ---------------------------------------------------------------- certificates

struct LowerBoundCert {
  enum class Kind { EnergyTwoPoint, IndirectTwoPoint };
  Kind kind = Kind::EnergyTwoPoint;
  double r1 = 0.0, r2 = 0.0, sigma1 = 0.0, sigma2 = 0.0;
  Vec witness;           // indirect kind
  double overlap = 0.0;  // energy kind: verified min-density integral
  double bound = 0.0;
  double epsilon = 0.01;

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind == Kind::EnergyTwoPoint ? "energy_two_point"
                                                           : "indirect_two_point"},
                     {"overlap", overlap},
                     {"bound", bound},
                     {"epsilon", epsilon}};
    if (kind == Kind::EnergyTwoPoint)
      j["params"] = {{"r1", r1}, {"r2", r2}, {"sigma1", sigma1}, {"sigma2", sigma2}};
    else
      j["params"] = {{"witness", witness}};
    return j;
  }
};

namespace detail {

/// Exact overlap of two normal densities (the moment-matched surrogate used to
/// order the energy search; accepts are always re-verified with the true
/// noncentral chi-square overlap).
inline double normal_overlap(double mu1, double v1, double mu2, double v2) {
  const double s1 = std::sqrt(v1), s2 = std::sqrt(v2);
  auto mass = [&](double mu, double s, double a, double b) {
    return gauss_cdf((b - mu) / s) - gauss_cdf((a - mu) / s);
  };
  // crossings of the two log densities
  const double A = 0.5 / v2 - 0.5 / v1;
  const double B = mu1 / v1 - mu2 / v2;
  const double C = 0.5 * mu2 * mu2 / v2 - 0.5 * mu1 * mu1 / v1 + std::log(s2 / s1);
  std::vector<double> xs;
  if (std::abs(A) < 1e-14 * (1.0 / v1)) {
    if (std::abs(B) > 1e-300) xs.push_back(-C / B);
  } else {
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      xs.push_back((-B - sq) / (2.0 * A));
      xs.push_back((-B + sq) / (2.0 * A));
      if (xs[0] > xs[1]) std::swap(xs[0], xs[1]);
    }
  }
  const double lo = std::min(mu1 - 12.0 * s1, mu2 - 12.0 * s2);
  const double hi = std::max(mu1 + 12.0 * s1, mu2 + 12.0 * s2);
  std::vector<double> edges{lo};
  for (double x : xs)
    if (x > lo && x < hi) edges.push_back(x);
  edges.push_back(hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double mid = 0.5 * (edges[i] + edges[i + 1]);
    const double l1 = -0.5 * (mid - mu1) * (mid - mu1) / v1 - std::log(s1);
    const double l2 = -0.5 * (mid - mu2) * (mid - mu2) / v2 - std::log(s2);
    total += (l1 < l2) ? mass(mu1, s1, edges[i], edges[i + 1])
                       : mass(mu2, s2, edges[i], edges[i + 1]);
  }
  return std::clamp(total, 0.0, 1.0);
}

inline double energy_surrogate_overlap(int m, double r1, double s1, double r2, double s2) {
  const double mu1 = r1 * r1 + m * s1 * s1, v1 = 2.0 * m * std::pow(s1, 4) + 4.0 * s1 * s1 * r1 * r1;
  const double mu2 = r2 * r2 + m * s2 * s2, v2 = 2.0 * m * std::pow(s2, 4) + 4.0 * s2 * s2 * r2 * r2;
  return normal_overlap(mu1, std::max(v1, 1e-300), mu2, std::max(v2, 1e-300));
}

inline std::vector<double> lin_grid(double lo, double hi, int n) {
  std::vector<double> g;
  if (hi <= lo || n <= 1) {
    g.push_back(lo);
    return g;
  }
  for (int i = 0; i < n; ++i)
    g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace detail

/// Numerical two-point lower bound for the energy problem on the spherical layer
/// r <= ||u|| <= R with diagonal noise in [theta sigma^2, sigma^2].
///
/// Candidate bound values climb the ladder b0 1.05^i; for each rung the
/// admissible (r1, sigma1, sigma2) grids (33 points per coordinate, r2 =
/// sqrt(r1^2 + 2b)) are scanned in surrogate-overlap order and a rung is accepted
/// once the true overlap exceeds 2 eps; one refinement pass halves the grid steps
/// around the incumbent. Every accept is verified with the quadrature overlap, so
/// the returned certificate is self-contained.
inline LowerBoundCert energy_lower_bound(int m, double r, double R, double theta, double sigma,
                                         double epsilon) {
  if (!(R >= r && r >= 0.0) || sigma <= 0.0 || theta < 0.0 || theta > 1.0)
    throw std::domain_error("energy_lower_bound: bad parameter ranges");
  LowerBoundCert cert;
  cert.kind = LowerBoundCert::Kind::EnergyTwoPoint;
  cert.epsilon = epsilon;
  const double bmax = 0.5 * (R * R - r * r);
  if (bmax <= 0.0) return cert;  // degenerate layer

  const double sig_lo = std::sqrt(theta) * sigma, sig_hi = sigma;
  const double threshold = 2.0 * epsilon;

  struct Witness {
    double r1, s1, s2, ov;
  };

  const int pts_r = 33;
  const int pts_s = theta == 1.0 ? 1 : 33;  // single admissible sigma at theta = 1

  // scan one rung: surrogate-ordered grids, true-overlap verification of accepts
  auto test_rung = [&](double b, double r1_lo, double r1_hi, double s_lo, double s_hi,
                       int nr, int ns) -> std::optional<Witness> {
    const double r1_cap = std::sqrt(std::max(R * R - 2.0 * b, 0.0));
    r1_hi = std::min(r1_hi, r1_cap);
    if (r1_hi < r1_lo) return std::nullopt;
    std::vector<Witness> cands;
    for (double r1 : detail::lin_grid(r1_lo, r1_hi, nr)) {
      const double r2 = std::sqrt(r1 * r1 + 2.0 * b);
      for (double s1 : detail::lin_grid(s_lo, s_hi, ns))
        for (double s2 : detail::lin_grid(s_lo, s_hi, ns))
          cands.push_back({r1, s1, s2,
                           detail::energy_surrogate_overlap(m, r1, s1, r2, s2)});
    }
    std::sort(cands.begin(), cands.end(),
              [](const Witness& a, const Witness& b2) { return a.ov > b2.ov; });
    const int tries = std::min<int>(12, static_cast<int>(cands.size()));
    for (int i = 0; i < tries; ++i) {
      if (cands[static_cast<std::size_t>(i)].ov < 0.2 * threshold) break;  // hopeless rung
      Witness w = cands[static_cast<std::size_t>(i)];
      const double r2 = std::sqrt(w.r1 * w.r1 + 2.0 * b);
      w.ov = overlap(m, w.r1, w.s1, r2, w.s2);
      if (w.ov > threshold) return w;
    }
    return std::nullopt;
  };
  auto test_full = [&](double b) { return test_rung(b, r, R, sig_lo, sig_hi, pts_r, pts_s); };

  // ladder of candidate bounds
  std::vector<double> ladder;
  for (double b = bmax * 1e-4; b <= bmax * (1.0 + 1e-12); b *= 1.05) ladder.push_back(b);
  if (ladder.empty()) return cert;

  // surrogate-only bisection locates the acceptance frontier cheaply
  auto surrogate_accepts = [&](double b) {
    const double r1_cap = std::sqrt(std::max(R * R - 2.0 * b, 0.0));
    double best = 0.0;
    for (double r1 : detail::lin_grid(r, r1_cap, pts_r)) {
      const double r2 = std::sqrt(r1 * r1 + 2.0 * b);
      for (double s1 : detail::lin_grid(sig_lo, sig_hi, pts_s))
        for (double s2 : detail::lin_grid(sig_lo, sig_hi, pts_s))
          best = std::max(best, detail::energy_surrogate_overlap(m, r1, s1, r2, s2));
    }
    return best > threshold;
  };
  const int top = static_cast<int>(ladder.size()) - 1;
  int lo_i = 0;
  if (surrogate_accepts(ladder[static_cast<std::size_t>(top)])) {
    lo_i = top;
  } else if (surrogate_accepts(ladder[0])) {
    int hi_i = top;
    while (hi_i - lo_i > 1) {
      const int mid = (lo_i + hi_i) / 2;
      (surrogate_accepts(ladder[static_cast<std::size_t>(mid)]) ? lo_i : hi_i) = mid;
    }
  }

  // true verification: walk down from a little above the surrogate frontier
  int best_i = -1;
  std::optional<Witness> best_w;
  for (int i = std::min(lo_i + 3, top); i >= 0; --i) {
    if (auto w = test_full(ladder[static_cast<std::size_t>(i)])) {
      best_i = i;
      best_w = w;
      break;
    }
  }
  if (best_i < 0) return cert;  // nothing accepted: bound-0 certificate
  // climb while rungs keep accepting (the surrogate frontier can undershoot)
  while (best_i + 1 <= top) {
    auto w = test_full(ladder[static_cast<std::size_t>(best_i + 1)]);
    if (!w) break;
    ++best_i;
    best_w = w;
  }
  cert.bound = ladder[static_cast<std::size_t>(best_i)];

  // one refinement pass: halved steps around the incumbent witness
  {
    const double b_next = cert.bound * 1.05;
    if (b_next <= bmax) {
      const double dr = (R - r) / (pts_r - 1.0);
      const double ds = pts_s > 1 ? (sig_hi - sig_lo) / (pts_s - 1.0) : 0.0;
      auto w = test_rung(b_next, std::max(r, best_w->r1 - 4.0 * dr),
                         std::min(R, best_w->r1 + 4.0 * dr),
                         std::max(sig_lo, best_w->s1 - 4.0 * ds),
                         std::min(sig_hi, best_w->s1 + 4.0 * ds), 17, pts_s > 1 ? 17 : 1);
      if (w) {
        best_w = w;
        cert.bound = b_next;
      }
    }
  }
  cert.r1 = best_w->r1;
  cert.r2 = std::sqrt(best_w->r1 * best_w->r1 + 2.0 * cert.bound);
  cert.sigma1 = best_w->s1;
  cert.sigma2 = best_w->s2;
  cert.overlap = best_w->ov;
  return cert;
}

/// Suboptimal maximization of phi(w) = ||w||^2 (1 - theta(w)^2)/2 over the
/// ellipsoid U = { ||S u|| <= 1 }: kernel directions of P, generalized
/// eigendirections of (P'P, S'S) with radial scans, 200 random boundary probes,
/// then compass polishing. Any feasible w certifies, so suboptimality only
/// weakens the bound.
inline LowerBoundCert indirect_lower_bound(const Matrix& p, const Matrix& s_op, double sigma,
                                           double epsilon, int probes = 200,
                                           std::uint64_t seed = 0) {
  const int m = p.cols();
  check_same_dim(static_cast<std::size_t>(s_op.cols()), static_cast<std::size_t>(m),
                 "indirect_lower_bound");
  const double rho = 2.0 * sigma * gauss_quantile(1.0 - epsilon);
  auto phi = [&](const Vec& w) {
    const double t = norm2(p.mul(w));
    const double th = std::max(1.0 - rho / std::max(t, 1e-300), 0.0);
    return 0.5 * dot(w, w) * (1.0 - th * th);
  };
  auto snorm = [&](const Vec& w) { return norm2(s_op.mul(w)); };

  Vec best = zeros(m);
  double best_val = 0.0;
  auto consider = [&](const Vec& w) {
    const double sn = snorm(w);
    if (sn > 1.0 + 1e-12) return;
    const double v = phi(w);
    if (v > best_val) {
      best_val = v;
      best = w;
    }
  };

  // S'S Cholesky for the generalized eigenbasis
  SymMatrix sts(m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double v = 0.0;
      for (int r = 0; r < s_op.rows(); ++r) v += s_op(r, i) * s_op(r, j);
      sts.set(i, j, v);
    }
  auto lchol = cholesky(sts);
  if (!lchol) throw std::invalid_argument("indirect_lower_bound: S'S must be PD");

  // generalized eigendirections of (P'P, S'S): w = L^{-T} y, automatically ||Sw|| = 1
  {
    SymMatrix ptp(m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double v = 0.0;
        for (int r = 0; r < p.rows(); ++r) v += p(r, i) * p(r, j);
        ptp.set(i, j, v);
      }
    Matrix linv_t(m, m);
    for (int j = 0; j < m; ++j) linv_t.set_col(j, backward_subst_t(*lchol, unit_vec(m, j)));
    const Matrix mid = linv_t.transposed().mul(ptp.to_general()).mul(linv_t);
    const SymEigen ge = sym_eigen(SymMatrix::from_general(mid));
    for (int k = 0; k < m; ++k) {
      const Vec w1 = linv_t.mul(ge.vectors.col(k));
      for (double t = 0.1; t <= 1.0 + 1e-12; t += 0.1) consider(scaled(w1, t));
    }
  }
  // random boundary probes
  RngStream rng(seed, 3);
  for (int t = 0; t < probes; ++t) {
    Vec v = rng.gaussian_vec(m);
    const double sn = snorm(v);
    if (sn < 1e-12) continue;
    scale(v, 1.0 / sn);
    consider(v);
    consider(scaled(v, 0.5));
  }
  // compass polish
  double step = 0.25;
  for (int round = 0; round < 60; ++round) {
    bool improved = false;
    for (int j = 0; j < m; ++j) {
      for (double dir : {1.0, -1.0}) {
        Vec cand = best;
        cand[static_cast<std::size_t>(j)] += dir * step;
        const double sn = snorm(cand);
        if (sn > 1.0) scale(cand, 1.0 / sn);
        if (phi(cand) > best_val) {
          best_val = phi(cand);
          best = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1e-6) break;
  }

  LowerBoundCert cert;
  cert.kind = LowerBoundCert::Kind::IndirectTwoPoint;
  cert.epsilon = epsilon;
  cert.witness = best;
  cert.bound = best_val;
  return cert;
}

/// Suboptimality ratio rho / bound; requires a positive bound, and a ratio below
/// 1 indicates an internal inconsistency (a certified upper bound can never
/// undercut a valid lower bound).
inline double minimax_sandwich(double opt_value, const LowerBoundCert& cert) {
  if (cert.bound <= 0.0)
    throw std::invalid_argument(
        "minimax_sandwich: zero lower bound; report properties only for this config");
  const double ratio = opt_value / cert.bound;
  if (ratio < 1.0 - 1e-9)
    throw std::logic_error("minimax_sandwich: upper bound fell below the certified lower bound");
  return ratio;
}

}  // namespace minimax
