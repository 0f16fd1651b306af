#pragma once

// The three families of distributions the estimators work with, each given by a
// convex-concave function Phi that dominates the log-MGF of the (possibly lifted)
// observation:
//   * sub-Gaussian vectors:        Phi(h; theta, Theta) = theta'h + h'Theta h / 2
//   * quadratically lifted Gaussian observations (h, H) with matrix bound Theta*,
//     mismatch delta and spectral cap gamma on H
//   * quadratically lifted discrete observations, the pairwise-product statistic
//     of K i.i.d. categorical draws
//
// Gradients are exact in the convex argument; the one nonsmooth term (the spectral
// norm inside the Gaussian-lift penalty) contributes a subgradient built from the
// top eigenvector, ties broken by the lowest eigen-index.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "minimax/linalg.hpp"
#include "minimax/rng.hpp"
#include "minimax/stats.hpp"

namespace minimax {

// ---------------------------------------------------------------- sub-Gaussian

inline double subgaussian_phi(const Vec& h, const Vec& theta, const SymMatrix& big_theta) {
  check_same_dim(h.size(), theta.size(), "subgaussian_phi");
  return dot(theta, h) + 0.5 * big_theta.quad_form(h);
}

inline Vec subgaussian_grad(const Vec& h, const Vec& theta, const SymMatrix& big_theta) {
  check_same_dim(h.size(), theta.size(), "subgaussian_grad");
  Vec g = big_theta.mul(h);
  axpy(1.0, theta, g);
  return g;
}

// ----------------------------------------------------- scaled log-partition

/// m * ln( sum_ij Z_ij exp(H_ij / m) ), evaluated in log-sum-exp form with a
/// max shift (H/m entries can reach +-1e3 during line searches). Also returns the
/// softmax weight matrix when requested.
inline double log_partition_scaled(const SymMatrix& h, const SymMatrix& z, double m,
                                   SymMatrix* weights = nullptr) {
  check_same_dim(static_cast<std::size_t>(h.dim()), static_cast<std::size_t>(z.dim()),
                 "log_partition_scaled");
  const int d = h.dim();
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) shift = std::max(shift, h(i, j) / m);
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s += std::max(z(i, j), 0.0) * std::exp(h(i, j) / m - shift);
  const double value = m * (shift + std::log(s));
  if (weights) {
    *weights = SymMatrix(d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        weights->set(i, j, 0.5 * (std::max(z(i, j), 0.0) * std::exp(h(i, j) / m - shift) +
                                  std::max(z(j, i), 0.0) * std::exp(h(j, i) / m - shift)) /
                               s);
  }
  return value;
}

// ---------------------------------------------------------------- Gaussian lift

class GaussLiftFamily {
 public:
  /// theta_star must be positive definite (certified by Cholesky here);
  /// delta in [0,2] bounds the covariance mismatch; gamma in (0,1) caps the
  /// spectral radius of Theta*^{1/2} H Theta*^{1/2} over the admissible H.
  GaussLiftFamily(SymMatrix theta_star, double delta, double gamma = 0.99)
      : theta_star_(std::move(theta_star)), delta_(delta), gamma_(gamma) {
    if (!cholesky(theta_star_))
      throw std::invalid_argument("GaussLiftFamily: Theta* must be positive definite");
    if (delta_ < 0.0 || delta_ > 2.0)
      throw std::invalid_argument("GaussLiftFamily: delta must lie in [0,2]");
    if (gamma_ <= 0.0 || gamma_ >= 1.0)
      throw std::invalid_argument("GaussLiftFamily: gamma must lie in (0,1)");
    const SymEigen e = sym_eigen(theta_star_);
    sqrt_ = eigen_apply(e, [](double l) { return std::sqrt(l); });
    inv_sqrt_ = eigen_apply(e, [](double l) { return 1.0 / std::sqrt(l); });
    inv_ = eigen_apply(e, [](double l) { return 1.0 / l; });
  }

  /// Diagonal-box covariance model [lb_i, ub_i]: Theta* = diag(ub),
  /// delta = 1 - sqrt(min_i lb_i/ub_i).
  static GaussLiftFamily from_diag_box(const Vec& lb, const Vec& ub, double gamma = 0.99) {
    check_same_dim(lb.size(), ub.size(), "GaussLiftFamily::from_diag_box");
    double theta_floor = 1.0;
    for (std::size_t i = 0; i < lb.size(); ++i) {
      if (ub[i] <= 0.0) throw std::invalid_argument("from_diag_box: upper bounds must be > 0");
      if (lb[i] < 0.0 || lb[i] > ub[i])
        throw std::invalid_argument("from_diag_box: need 0 <= lb <= ub");
      theta_floor = std::min(theta_floor, lb[i] / ub[i]);
    }
    return GaussLiftFamily(SymMatrix::diag(ub), 1.0 - std::sqrt(theta_floor), gamma);
  }

  int dim() const { return theta_star_.dim(); }
  double delta() const { return delta_; }
  double gamma() const { return gamma_; }
  const SymMatrix& theta_star() const { return theta_star_; }
  const SymMatrix& theta_star_inv() const { return inv_; }
  const SymMatrix& sqrt_theta_star() const { return sqrt_; }

  SymMatrix h_tilde(const SymMatrix& h_mat) const {
    return congruence(sqrt_.to_general(), h_mat);
  }

  double spec_norm_h_tilde(const SymMatrix& h_mat) const {
    const SymEigen e = sym_eigen(h_tilde(h_mat));
    return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
  }

  /// Phi(h,H; Theta, Z) = Upsilon(H,Theta) + Gamma(h,H;Z). Z is the (d+1)-dim
  /// lifted mean parameter with corner entry pinned to 1.
  double phi(const Vec& h, const SymMatrix& h_mat, const SymMatrix& big_theta,
             const SymMatrix& z) const {
    const Workspace w = eval(h, h_mat, z);
    return w.upsilon_const + 0.5 * big_theta.inner(h_mat) - 0.5 * theta_star_.inner(h_mat) +
           w.gamma;
  }

  struct Grad {
    Vec h;
    SymMatrix h_mat;
  };

  /// Exact analytic gradient of phi in (h, H); the spectral-norm term contributes
  /// a subgradient from the top eigenvector of H~.
  Grad grad(const Vec& h, const SymMatrix& h_mat, const SymMatrix& big_theta,
            const SymMatrix& z) const {
    const int d = dim();
    const Workspace ws = eval(h, h_mat, z);

    Grad g;
    // Gamma parts
    SymMatrix z11(d);
    Vec z12(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      z12[static_cast<std::size_t>(i)] = z(i, d);
      for (int j = i; j < d; ++j) z11.set(i, j, z(i, j));
    }
    const double z22 = z(d, d);

    const Vec wh = ws.w.mul(h);
    const Vec hz12 = h_mat.mul(z12);
    g.h = z12;
    axpy(1.0, ws.w.mul(hz12), g.h);
    axpy(z22, wh, g.h);

    // dGamma/dH = 0.5 [ Z11 + W H Z11 + Z11 H W + W h z12' + z12 h' W + W (J Z J') W ]
    Matrix whz = ws.w.to_general().mul(h_mat.to_general()).mul(z11.to_general());
    SymMatrix gh(d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double v = z11(i, j) + whz(i, j) + whz(j, i);
        v += wh[static_cast<std::size_t>(i)] * z12[static_cast<std::size_t>(j)] +
             wh[static_cast<std::size_t>(j)] * z12[static_cast<std::size_t>(i)];
        gh.set(i, j, v);
      }
    const SymMatrix wjzw = congruence(ws.w.to_general(), ws.jzj);
    gh.add_scaled(wjzw, 1.0);
    gh *= 0.5;

    // Upsilon parts: 0.5 W from the log-det, 0.5(Theta - Theta*), spectral penalty
    gh.add_scaled(ws.w, 0.5);
    gh.add_scaled(big_theta, 0.5);
    gh.add_scaled(theta_star_, -0.5);
    if (delta_ > 0.0) {
      const double c = delta_ * (2.0 + delta_);
      const double one_minus = 1.0 - ws.spec_norm;
      // d(frob^2): 2 S* H~ S*
      SymMatrix sh = congruence(sqrt_.to_general(), h_tilde(h_mat));
      gh.add_scaled(sh, c / one_minus);
      // d(spec norm): sign * S* u u' S* at the top eigenvalue (lowest index on ties)
      Vec su = sqrt_.mul(ws.top_vec);
      SymMatrix suu = SymMatrix::sym_outer(su, su, 0.5);
      gh.add_scaled(suu, ws.top_sign * c * ws.fro2 / (2.0 * one_minus * one_minus));
    }
    g.h_mat = std::move(gh);
    return g;
  }

  // ------------------------------------------------ alpha-parametrized pieces
  //
  // The estimator programs evaluate alpha * Phi(h/alpha, H/alpha; Theta, Z).
  // In the eigenbasis of H~ this is an O(d) function of alpha:
  //   alpha*Upsilon(H/a,Theta) = -(a/2) sum ln(1 - l_i/a) + Tr((Theta-Theta*)H)/2
  //                              + delta(2+delta) F2 / (2 (a - s))
  //   alpha*Gamma(h/a,H/a;Z)   = b0(Z) + 0.5 sum_i w_i(Z) / (a - l_i)
  // with l = eigenvalues of H~, s = max|l|, F2 = sum l^2,
  //      R = U' S* [H, h],  w_i = (R Z R')_{ii},  b0 = Tr(Z blockmat(H,h))/2.

  struct Prepared {
    Vec lambda;       // eigenvalues of H~
    Matrix r;         // U' S* [H, h]   (d x (d+1))
    double spec_norm; // max |lambda|
    double fro2;      // sum lambda^2
    SymMatrix h_mat;
    Vec h;
  };

  Prepared prepare(const Vec& h, const SymMatrix& h_mat) const {
    const int d = dim();
    check_same_dim(h.size(), static_cast<std::size_t>(d), "GaussLiftFamily::prepare");
    Prepared p;
    p.h_mat = h_mat;
    p.h = h;
    const SymEigen e = sym_eigen(h_tilde(h_mat));
    p.lambda = e.values;
    p.spec_norm = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
    p.fro2 = 0.0;
    for (double l : e.values) p.fro2 += l * l;
    // rows of R: (U' S*) [H, h]
    Matrix us = e.vectors.transposed().mul(sqrt_.to_general());
    Matrix j(d, d + 1);
    for (int i = 0; i < d; ++i) {
      for (int k = 0; k < d; ++k) j(i, k) = h_mat(i, k);
      j(i, d) = h[static_cast<std::size_t>(i)];
    }
    p.r = us.mul(j);
    return p;
  }

  /// Theta-independent part of alpha*Upsilon(H/alpha, .); requires alpha > ||H~||.
  double upsilon_alpha(const Prepared& p, double alpha) const {
    if (alpha <= p.spec_norm) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double l : p.lambda) s += std::log1p(-l / alpha);
    double v = -0.5 * alpha * s;
    if (delta_ > 0.0)
      v += delta_ * (2.0 + delta_) * p.fro2 / (2.0 * (alpha - p.spec_norm));
    return v;
  }

  struct GammaAlpha {
    double b0;
    Vec w;  // alpha*Gamma = b0 + 0.5 sum w_i / (alpha - lambda_i)
  };

  GammaAlpha gamma_alpha(const Prepared& p, const SymMatrix& z) const {
    const int d = dim();
    check_same_dim(static_cast<std::size_t>(z.dim()), static_cast<std::size_t>(d + 1),
                   "GaussLiftFamily::gamma_alpha");
    GammaAlpha g;
    // b0 = Tr(Z blockmat(H,h))/2 = (Tr(Z11 H) + 2 z12'h)/2
    double b0 = 0.0;
    for (int i = 0; i < d; ++i) {
      b0 += z(i, d) * p.h[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j) b0 += 0.5 * z(i, j) * p.h_mat(i, j);
    }
    g.b0 = b0;
    g.w.assign(static_cast<std::size_t>(d), 0.0);
    // w_i = (R Z R')_{ii}
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int a = 0; a < d + 1; ++a) {
        double t = 0.0;
        for (int b = 0; b < d + 1; ++b) t += z(a, b) * p.r(i, b);
        s += p.r(i, a) * t;
      }
      g.w[static_cast<std::size_t>(i)] = s;
    }
    return g;
  }

  double gamma_alpha_value(const Prepared& p, const GammaAlpha& g, double alpha) const {
    double s = g.b0;
    for (std::size_t i = 0; i < g.w.size(); ++i) {
      const double den = alpha - p.lambda[i];
      if (den <= 0.0) return std::numeric_limits<double>::infinity();
      s += 0.5 * g.w[i] / den;
    }
    return s;
  }

 private:
  struct Workspace {
    SymMatrix w;        // (Theta*^{-1} - H)^{-1}, through the H~ eigensystem
    SymMatrix jzj;      // [H,h] Z [H,h]'
    double upsilon_const;  // -1/2 ln det(I - H~) + spectral penalty
    double gamma;
    double spec_norm;
    double fro2;
    Vec top_vec;        // eigenvector of H~ at the largest |eigenvalue|
    double top_sign;
  };

  Workspace eval(const Vec& h, const SymMatrix& h_mat, const SymMatrix& z) const {
    const int d = dim();
    check_same_dim(h.size(), static_cast<std::size_t>(d), "GaussLiftFamily::phi");
    check_same_dim(static_cast<std::size_t>(z.dim()), static_cast<std::size_t>(d + 1),
                   "GaussLiftFamily::phi(Z)");
    if (std::abs(z(d, d) - 1.0) > 1e-9)
      throw std::domain_error("GaussLiftFamily: Z corner entry must equal 1");

    const SymEigen e = sym_eigen(h_tilde(h_mat));
    Workspace ws;
    ws.spec_norm = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
    if (ws.spec_norm >= 1.0)
      throw std::domain_error("GaussLiftFamily: spectral norm of Theta*^{1/2} H Theta*^{1/2} must be < 1");
    // tie rule: scan ascending, first strict max of |lambda| wins
    int top = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(e.values[static_cast<std::size_t>(i)]) >
          std::abs(e.values[static_cast<std::size_t>(top)]))
        top = i;
    // the derivative of ||H~|| in H is sign * S* u u' S* with u the H~-eigenvector;
    // keep u itself here, grad() applies S*
    ws.top_vec = e.vectors.col(top);
    ws.top_sign = e.values[static_cast<std::size_t>(top)] >= 0.0 ? 1.0 : -1.0;

    double lndet = 0.0;
    ws.fro2 = 0.0;
    for (double l : e.values) {
      lndet += std::log1p(-l);
      ws.fro2 += l * l;
    }
    ws.upsilon_const = -0.5 * lndet;
    if (delta_ > 0.0)
      ws.upsilon_const += delta_ * (2.0 + delta_) * ws.fro2 / (2.0 * (1.0 - ws.spec_norm));

    // W = S* U diag(1/(1-l)) U' S*
    SymMatrix mid(d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k)
          s += e.vectors(i, k) * e.vectors(j, k) / (1.0 - e.values[static_cast<std::size_t>(k)]);
        mid.set(i, j, s);
      }
    ws.w = congruence(sqrt_.to_general(), mid);

    // Gamma = ( Tr(Z11 H) + 2 z12'h + Tr(W J Z J') ) / 2
    Matrix j(d, d + 1);
    for (int i = 0; i < d; ++i) {
      for (int k = 0; k < d; ++k) j(i, k) = h_mat(i, k);
      j(i, d) = h[static_cast<std::size_t>(i)];
    }
    ws.jzj = congruence(j, z);
    double g = ws.w.inner(ws.jzj);
    for (int i = 0; i < d; ++i) {
      g += 2.0 * z(i, d) * h[static_cast<std::size_t>(i)];
      for (int k = 0; k < d; ++k) g += z(i, k) * h_mat(i, k);
    }
    ws.gamma = 0.5 * g;
    return ws;
  }

  SymMatrix theta_star_;
  double delta_, gamma_;
  SymMatrix sqrt_, inv_sqrt_, inv_;
};

// ---------------------------------------------------------------- discrete lift

class DiscreteLiftFamily {
 public:
  DiscreteLiftFamily(int d, int repetitions_m) : d_(d), m_(repetitions_m) {
    if (d < 1) throw std::invalid_argument("DiscreteLiftFamily: dim >= 1 required");
    if (m_ < 1) throw std::invalid_argument("DiscreteLiftFamily: M >= 1 required");
  }
  /// M(K) = floor(K/2); the lift needs at least one pair.
  static DiscreteLiftFamily for_sample_size(int d, int k) {
    if (k < 2) throw std::invalid_argument("DiscreteLiftFamily: K >= 2 required");
    return DiscreteLiftFamily(d, k / 2);
  }

  int dim() const { return d_; }
  int repetitions_m() const { return m_; }

  /// Phi_M(H; Z) = M ln( sum_ij Z_ij exp(H_ij/M) ); Z must lie in the matrix
  /// simplex (entrywise >= -1e-9, entries summing to 1 within 1e-9).
  double phi(const SymMatrix& h, const SymMatrix& z) const {
    validate_z(z);
    return log_partition_scaled(h, z, static_cast<double>(m_));
  }

  SymMatrix grad_h(const SymMatrix& h, const SymMatrix& z) const {
    validate_z(z);
    SymMatrix w(d_);
    log_partition_scaled(h, z, static_cast<double>(m_), &w);
    return w;
  }

 private:
  void validate_z(const SymMatrix& z) const {
    check_same_dim(static_cast<std::size_t>(z.dim()), static_cast<std::size_t>(d_),
                   "DiscreteLiftFamily");
    double s = 0.0;
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        if (z(i, j) < -1e-9)
          throw std::domain_error("DiscreteLiftFamily: Z has a negative entry");
        s += z(i, j);
      }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::domain_error("DiscreteLiftFamily: Z entries must sum to 1");
  }

  int d_;
  int m_;
};

// ---------------------------------------------------------------- MGF checks

struct MgfReport {
  double empirical_log_mgf;
  double stderr_;
  double phi_bound;
  bool dominated;  // empirical <= phi + 3 stderr
};

/// Empirical check of the Gaussian-lift domination: samples zeta ~ N(theta,Theta)
/// and compares ln E exp(h'zeta + zeta'H zeta/2) against Phi.
inline MgfReport mgf_dominates_gauss_lift(const GaussLiftFamily& fam, const Vec& h,
                                          const SymMatrix& h_mat, const Vec& theta,
                                          const SymMatrix& big_theta, int n_samples,
                                          std::uint64_t seed) {
  const int d = fam.dim();
  check_same_dim(theta.size(), static_cast<std::size_t>(d), "mgf_dominates_gauss_lift");
  Matrix l(d, d);
  if (auto c = cholesky(big_theta)) {
    l = *c;
  } else {  // semidefinite fallback: eigen square root
    l = eigen_apply(sym_eigen(big_theta), [](double v) { return std::sqrt(std::max(v, 0.0)); })
            .to_general();
  }
  RngStream rng(seed, 0);
  Vec logs(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Vec zeta = l.mul(rng.gaussian_vec(d));
    axpy(1.0, theta, zeta);
    logs[static_cast<std::size_t>(i)] = dot(h, zeta) + 0.5 * h_mat.quad_form(zeta);
  }
  const LogMeanExp lme = log_mean_exp(logs);
  // Z = [theta;1][theta;1]'
  SymMatrix z(d + 1);
  for (int i = 0; i <= d; ++i)
    for (int j = i; j <= d; ++j) {
      const double a = i < d ? theta[static_cast<std::size_t>(i)] : 1.0;
      const double b = j < d ? theta[static_cast<std::size_t>(j)] : 1.0;
      z.set(i, j, a * b);
    }
  MgfReport rep;
  rep.empirical_log_mgf = lme.value;
  rep.stderr_ = lme.stderr_;
  rep.phi_bound = fam.phi(h, h_mat, big_theta, z);
  rep.dominated = rep.empirical_log_mgf <= rep.phi_bound + 3.0 * rep.stderr_;
  return rep;
}

/// Averaged symmetrized pairwise outer product of K categorical draws,
/// computed from category counts: (c c' - diag(c)) / (K (K-1)).
inline SymMatrix pairwise_lift_from_counts(const std::vector<int>& counts, int k_total) {
  const int d = static_cast<int>(counts.size());
  if (k_total < 2) throw std::invalid_argument("pairwise_lift_from_counts: K >= 2 required");
  SymMatrix w(d);
  const double denom = static_cast<double>(k_total) * (k_total - 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double v = static_cast<double>(counts[static_cast<std::size_t>(i)]) *
                 static_cast<double>(counts[static_cast<std::size_t>(j)]);
      if (i == j) v -= counts[static_cast<std::size_t>(i)];
      w.set(i, j, v / denom);
    }
  return w;
}

/// Empirical check of the discrete-lift domination: samples omega[zeta^K] and
/// compares ln E exp(Tr(H omega)) against Phi_M(H; mu mu').
inline MgfReport mgf_dominates_discrete_lift(const DiscreteLiftFamily& fam, const SymMatrix& h,
                                             const Vec& mu, int k_reps, int n_samples,
                                             std::uint64_t seed) {
  const int d = fam.dim();
  check_same_dim(mu.size(), static_cast<std::size_t>(d), "mgf_dominates_discrete_lift");
  Vec cum(mu.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += mu[i];
    cum[i] = acc;
  }
  RngStream rng(seed, 1);
  Vec logs(static_cast<std::size_t>(n_samples));
  std::vector<int> counts(static_cast<std::size_t>(d));
  for (int s = 0; s < n_samples; ++s) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int k = 0; k < k_reps; ++k) {
      const double u = rng.next_uniform();
      int idx = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u * acc) - cum.begin());
      idx = std::min(idx, d - 1);
      ++counts[static_cast<std::size_t>(idx)];
    }
    const SymMatrix omega = pairwise_lift_from_counts(counts, k_reps);
    logs[static_cast<std::size_t>(s)] = h.inner(omega);
  }
  const LogMeanExp lme = log_mean_exp(logs);
  SymMatrix z(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      z.set(i, j, mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(j)]);
  MgfReport rep;
  rep.empirical_log_mgf = lme.value;
  rep.stderr_ = lme.stderr_;
  rep.phi_bound = fam.phi(h, z);
  rep.dominated = rep.empirical_log_mgf <= rep.phi_bound + 3.0 * rep.stderr_;
  return rep;
}

}  // namespace minimax
