#pragma once

// Convex compact sets exposed through membership / support / linear-maximization /
// projection oracles. Matrix-valued sets live in the flattened R^{n*n} space, where
// the Euclidean inner product coincides with the Frobenius one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "minimax/linalg.hpp"

namespace minimax {

enum class SetKind {
  Box,
  EuclideanBall,
  Ellipsoid,
  SphericalLayer,
  Simplex,
  MatrixSimplex,
  SpectahedronSlice,
  Singleton,
  Product,
  AffinePreimage,
};

struct SupportResult {
  double value;
  Vec argmax;
};

class ConvexSet {
 public:
  virtual ~ConvexSet() = default;

  virtual SetKind kind() const = 0;
  virtual int dim() const = 0;
  virtual bool contains(const Vec& p, double tol = 1e-9) const = 0;

  /// max_{x in set} <dir, x> together with a maximizer.
  virtual SupportResult support(const Vec& dir) const = 0;

  /// Euclidean projection onto the set.
  virtual Vec project(const Vec& p) const = 0;

  /// Extreme-point maximizer of <c, .>; defaults to the support argmax.
  virtual Vec linear_oracle(const Vec& c) const { return support(c).argmax; }

  /// True when linear_oracle returns an exact extreme point (Frank-Wolfe usable).
  virtual bool exact_linear_oracle() const { return true; }

  /// Deterministic point in (the relative interior of) the set.
  virtual Vec interior_point() const = 0;

  /// Crude upper bound on the set diameter; step-size scale for subgradient schemes.
  virtual double diameter_hint() const {
    SupportResult plus, minus;
    double d2 = 0.0;
    for (int i = 0; i < dim(); ++i) {
      Vec e = unit_vec(dim(), i);
      plus = support(e);
      scale(e, -1.0);
      minus = support(e);
      const double w = plus.value + minus.value;  // width along coordinate i
      d2 += w * w;
    }
    return std::sqrt(d2);
  }

 protected:
  void check_dim(const Vec& v, const char* where) const {
    check_same_dim(v.size(), static_cast<std::size_t>(dim()), where);
  }
};

using SetPtr = std::shared_ptr<const ConvexSet>;

// ---------------------------------------------------------------- helpers

/// Projection onto { x >= 0, sum x = total } by sort-and-threshold.
/// The output depends on p only through the threshold, so ties need no breaking
/// and symmetric inputs project to symmetric outputs.
inline Vec simplex_project(const Vec& p, double total = 1.0) {
  const std::size_t n = p.size();
  Vec sorted = p;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += sorted[i];
    const double t = (cum - total) / static_cast<double>(i + 1);
    if (t < sorted[i]) tau = t;
  }
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(p[i] - tau, 0.0);
  return out;
}

// ---------------------------------------------------------------- Box

class BoxSet final : public ConvexSet {
 public:
  BoxSet(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    check_same_dim(lo_.size(), hi_.size(), "BoxSet");
    for (std::size_t i = 0; i < lo_.size(); ++i)
      if (lo_[i] > hi_[i]) throw std::invalid_argument("BoxSet: empty (lo > hi)");
  }
  static SetPtr make(Vec lo, Vec hi) {
    return std::make_shared<BoxSet>(std::move(lo), std::move(hi));
  }
  static SetPtr cube(int n, double lo, double hi) {
    return make(Vec(static_cast<std::size_t>(n), lo), Vec(static_cast<std::size_t>(n), hi));
  }

  SetKind kind() const override { return SetKind::Box; }
  int dim() const override { return static_cast<int>(lo_.size()); }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "BoxSet::contains");
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] < lo_[i] - tol || p[i] > hi_[i] + tol) return false;
    return true;
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "BoxSet::support");
    SupportResult r{0.0, Vec(dir.size())};
    for (std::size_t i = 0; i < dir.size(); ++i) {
      r.argmax[i] = dir[i] > 0.0 ? hi_[i] : lo_[i];
      r.value += dir[i] * r.argmax[i];
    }
    return r;
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "BoxSet::project");
    Vec out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::clamp(p[i], lo_[i], hi_[i]);
    return out;
  }

  Vec interior_point() const override {
    Vec c(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
    return c;
  }

  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }

 private:
  Vec lo_, hi_;
};

// ---------------------------------------------------------------- Ball

class BallSet final : public ConvexSet {
 public:
  BallSet(Vec center, double radius) : c_(std::move(center)), r_(radius) {
    if (r_ < 0.0) throw std::invalid_argument("BallSet: negative radius");
  }
  static SetPtr make(Vec center, double radius) {
    return std::make_shared<BallSet>(std::move(center), radius);
  }
  static SetPtr origin(int n, double radius) { return make(zeros(n), radius); }

  SetKind kind() const override { return SetKind::EuclideanBall; }
  int dim() const override { return static_cast<int>(c_.size()); }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "BallSet::contains");
    return norm2(sub(p, c_)) <= r_ + tol;
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "BallSet::support");
    const double nd = norm2(dir);
    Vec arg = c_;
    if (nd > 0.0) axpy(r_ / nd, dir, arg);
    else if (r_ > 0.0) arg[0] += r_;  // arbitrary boundary point, deterministic
    return {dot(dir, arg), arg};
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "BallSet::project");
    Vec d = sub(p, c_);
    const double nd = norm2(d);
    if (nd <= r_) return p;
    Vec out = c_;
    axpy(r_ / nd, d, out);
    return out;
  }

  Vec interior_point() const override { return c_; }
  double diameter_hint() const override { return 2.0 * r_; }

 private:
  Vec c_;
  double r_;
};

// ---------------------------------------------------------------- Ellipsoid

/// { x : (x-c)^T E (x-c) <= 1 } with E symmetric positive definite.
class EllipsoidSet final : public ConvexSet {
 public:
  EllipsoidSet(Vec center, SymMatrix e) : c_(std::move(center)), e_(std::move(e)) {
    check_same_dim(c_.size(), static_cast<std::size_t>(e_.dim()), "EllipsoidSet");
    eig_ = sym_eigen(e_);
    if (eig_.values.front() <= 0.0)
      throw std::invalid_argument("EllipsoidSet: shape matrix not positive definite");
  }
  static SetPtr make(Vec center, SymMatrix e) {
    return std::make_shared<EllipsoidSet>(std::move(center), std::move(e));
  }
  /// { u : ||S u||_2 <= 1 } for invertible S.
  static SetPtr from_operator(const Matrix& s) {
    const int n = s.cols();
    SymMatrix e(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double v = 0.0;
        for (int r = 0; r < s.rows(); ++r) v += s(r, i) * s(r, j);
        e.set(i, j, v);
      }
    return make(zeros(n), e);
  }

  SetKind kind() const override { return SetKind::Ellipsoid; }
  int dim() const override { return static_cast<int>(c_.size()); }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "EllipsoidSet::contains");
    return e_.quad_form(sub(p, c_)) <= 1.0 + tol;
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "EllipsoidSet::support");
    // max c^T x over the ellipsoid: c^T center + sqrt(dir^T E^{-1} dir)
    Vec einv_d = apply_inv(dir);
    const double s = std::sqrt(std::max(dot(dir, einv_d), 0.0));
    Vec arg = c_;
    if (s > 0.0) axpy(1.0 / s, einv_d, arg);
    return {dot(dir, arg), arg};
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "EllipsoidSet::project");
    Vec q = sub(p, c_);
    if (e_.quad_form(q) <= 1.0) return p;
    // w(mu) = (I + mu E)^{-1} q; find mu >= 0 with w^T E w = 1 (monotone decreasing)
    const int n = dim();
    Vec qt(static_cast<std::size_t>(n));  // eigenbasis coordinates
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += eig_.vectors(i, k) * q[static_cast<std::size_t>(i)];
      qt[static_cast<std::size_t>(k)] = s;
    }
    auto g = [&](double mu) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) {
        const double l = eig_.values[static_cast<std::size_t>(k)];
        const double w = qt[static_cast<std::size_t>(k)] / (1.0 + mu * l);
        s += l * w * w;
      }
      return s - 1.0;
    };
    double lo = 0.0, hi = 1.0;
    while (g(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    Vec out = c_;
    for (int k = 0; k < n; ++k) {
      const double wk = qt[static_cast<std::size_t>(k)] /
                        (1.0 + mu * eig_.values[static_cast<std::size_t>(k)]);
      for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] += eig_.vectors(i, k) * wk;
    }
    return out;
  }

  Vec interior_point() const override { return c_; }
  double diameter_hint() const override { return 2.0 / std::sqrt(eig_.values.front()); }

 private:
  Vec apply_inv(const Vec& v) const {
    const int n = dim();
    Vec out(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += eig_.vectors(i, k) * v[static_cast<std::size_t>(i)];
      s /= eig_.values[static_cast<std::size_t>(k)];
      for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] += eig_.vectors(i, k) * s;
    }
    return out;
  }

  Vec c_;
  SymMatrix e_;
  SymEigen eig_;
};

// ---------------------------------------------------------------- SphericalLayer

/// Signal container { r <= ||x|| <= R } centered at the origin. The layer itself is
/// not convex for r > 0; the oracle answers are those of the convex hull (the ball
/// of radius R — support functions agree with the hull by definition), and the
/// inner radius is kept so samplers can probe the actual layer.
class SphericalLayerSet final : public ConvexSet {
 public:
  SphericalLayerSet(int n, double r, double radius_outer) : n_(n), r_(r), R_(radius_outer) {
    if (r_ < 0.0 || R_ < r_) throw std::invalid_argument("SphericalLayerSet: need 0 <= r <= R");
  }
  static SetPtr make(int n, double r, double radius_outer) {
    return std::make_shared<SphericalLayerSet>(n, r, radius_outer);
  }

  SetKind kind() const override { return SetKind::SphericalLayer; }
  int dim() const override { return n_; }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "SphericalLayerSet::contains");
    return norm2(p) <= R_ + tol;  // hull membership
  }

  bool in_layer(const Vec& p, double tol = 1e-9) const {
    const double n = norm2(p);
    return n >= r_ - tol && n <= R_ + tol;
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "SphericalLayerSet::support");
    return BallSet(zeros(n_), R_).support(dir);
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "SphericalLayerSet::project");
    return BallSet(zeros(n_), R_).project(p);
  }

  Vec interior_point() const override { return zeros(n_); }
  double diameter_hint() const override { return 2.0 * R_; }

  double inner_radius() const { return r_; }
  double outer_radius() const { return R_; }

 private:
  int n_;
  double r_, R_;
};

// ---------------------------------------------------------------- Simplex

/// Probability simplex { x >= 0, sum x = 1 }.
class SimplexSet final : public ConvexSet {
 public:
  explicit SimplexSet(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("SimplexSet: dim >= 1 required");
  }
  static SetPtr make(int n) { return std::make_shared<SimplexSet>(n); }

  SetKind kind() const override { return SetKind::Simplex; }
  int dim() const override { return n_; }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "SimplexSet::contains");
    double s = 0.0;
    for (double x : p) {
      if (x < -tol) return false;
      s += x;
    }
    return std::abs(s - 1.0) <= tol;
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "SimplexSet::support");
    std::size_t best = 0;
    for (std::size_t i = 1; i < dir.size(); ++i)
      if (dir[i] > dir[best]) best = i;  // ties keep the lower index
    Vec arg = zeros(n_);
    arg[best] = 1.0;
    return {dir[best], arg};
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "SimplexSet::project");
    return simplex_project(p);
  }

  Vec interior_point() const override {
    return Vec(static_cast<std::size_t>(n_), 1.0 / static_cast<double>(n_));
  }
  double diameter_hint() const override { return std::sqrt(2.0); }

 private:
  int n_;
};

// ---------------------------------------------------------------- MatrixSimplex

/// Symmetric matrices with nonnegative entries summing to 1, flattened to R^{d*d}.
class MatrixSimplexSet final : public ConvexSet {
 public:
  explicit MatrixSimplexSet(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("MatrixSimplexSet: dim >= 1 required");
  }
  static SetPtr make(int d) { return std::make_shared<MatrixSimplexSet>(d); }

  SetKind kind() const override { return SetKind::MatrixSimplex; }
  int dim() const override { return d_ * d_; }
  int matrix_dim() const { return d_; }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "MatrixSimplexSet::contains");
    double s = 0.0;
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        const double v = p[idx(i, j)];
        if (v < -tol) return false;
        if (std::abs(v - p[idx(j, i)]) > tol) return false;
        s += v;
      }
    return std::abs(s - 1.0) <= tol;
  }

  /// Extreme points are e_i e_i^T and (e_i e_j^T + e_j e_i^T)/2; the best one sits
  /// at the largest entry of the symmetrized direction.
  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "MatrixSimplexSet::support");
    int bi = 0, bj = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j) {
        const double v = 0.5 * (dir[idx(i, j)] + dir[idx(j, i)]);
        if (v > best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    Vec arg = zeros(dim());
    if (bi == bj) {
      arg[idx(bi, bi)] = 1.0;
    } else {
      arg[idx(bi, bj)] = 0.5;
      arg[idx(bj, bi)] = 0.5;
    }
    return {best, arg};
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "MatrixSimplexSet::project");
    // symmetrize, then the flattened problem is a plain simplex projection
    Vec q(p.size());
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) q[idx(i, j)] = 0.5 * (p[idx(i, j)] + p[idx(j, i)]);
    return simplex_project(q);
  }

  Vec interior_point() const override {
    return Vec(static_cast<std::size_t>(dim()), 1.0 / static_cast<double>(dim()));
  }
  double diameter_hint() const override { return std::sqrt(2.0); }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * d_ + j; }
  int d_;
};

// ---------------------------------------------------------------- SpectahedronSlice

/// PSD matrices with the bottom-right corner pinned to 1 and one trace window
/// lo <= Tr(W Z) <= hi. The window (with W positive definite on the non-corner
/// block) is what makes the set compact; construction rejects anything unbounded.
class SpectahedronSliceSet final : public ConvexSet {
 public:
  struct TraceWindow {
    SymMatrix w;
    double lo;  // -inf allowed
    double hi;  // must be finite
  };

  SpectahedronSliceSet(int n, TraceWindow window, int dykstra_max_iter = 10000,
                       double dykstra_tol = 1e-10)
      : n_(n), win_(std::move(window)), max_iter_(dykstra_max_iter), tol_(dykstra_tol) {
    if (n < 2) throw std::invalid_argument("SpectahedronSliceSet: dim >= 2 required");
    check_same_dim(static_cast<std::size_t>(win_.w.dim()), static_cast<std::size_t>(n),
                   "SpectahedronSliceSet: window");
    if (!std::isfinite(win_.hi))
      throw std::invalid_argument("SpectahedronSliceSet: unbounded (finite upper trace bound required)");
    // W restricted to the non-corner block must be PD, else the set is unbounded.
    SymMatrix wtl(n_ - 1);
    for (int i = 0; i + 1 < n_; ++i)
      for (int j = i; j + 1 < n_; ++j) wtl.set(i, j, win_.w(i, j));
    auto chol = cholesky(wtl);
    if (!chol)
      throw std::invalid_argument("SpectahedronSliceSet: unbounded (trace weight not PD on block)");
    ltl_ = *chol;
    wfree_ = std::sqrt(std::max(win_.hi, 1.0)) * static_cast<double>(n_) /
             std::sqrt(std::max(eigen_min_wtl(wtl), 1e-300));
  }

  static SetPtr make(int n, TraceWindow window) {
    return std::make_shared<SpectahedronSliceSet>(n, std::move(window));
  }

  /// { Z psd, Z_{nn} = 1, lo <= Tr Z <= hi }  (the trace weight is the identity)
  static SetPtr trace_window(int n, double lo, double hi) {
    return make(n, TraceWindow{SymMatrix::identity(n), lo, hi});
  }

  SetKind kind() const override { return SetKind::SpectahedronSlice; }
  int dim() const override { return n_ * n_; }
  int matrix_dim() const { return n_; }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "SpectahedronSliceSet::contains");
    SymMatrix z = SymMatrix::from_flat(n_, p);
    if (std::abs(z(n_ - 1, n_ - 1) - 1.0) > tol) return false;
    const double tw = win_.w.inner(z);
    if (tw > win_.hi + tol * (1.0 + std::abs(win_.hi))) return false;
    if (std::isfinite(win_.lo) && tw < win_.lo - tol * (1.0 + std::abs(win_.lo))) return false;
    SymEigen e = sym_eigen(z);
    return e.values.front() >= -tol * std::max(1.0, e.values.back());
  }

  /// Dykstra alternation between {PSD}, {corner = 1} and the trace window.
  Vec project(const Vec& p) const override {
    check_dim(p, "SpectahedronSliceSet::project");
    SymMatrix z = SymMatrix::from_flat(n_, p);
    SymMatrix inc_psd(n_), inc_aff(n_), inc_win(n_);
    double gap = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter_; ++it) {
      const SymMatrix z_prev = z;

      z.add_scaled(inc_psd, 1.0);
      SymMatrix y = psd_clip(z);
      inc_psd = z;
      inc_psd.add_scaled(y, -1.0);
      z = y;

      z.add_scaled(inc_aff, 1.0);
      y = z;
      y.set(n_ - 1, n_ - 1, 1.0);
      inc_aff = z;
      inc_aff.add_scaled(y, -1.0);
      z = y;

      z.add_scaled(inc_win, 1.0);
      y = project_window(z);
      inc_win = z;
      inc_win.add_scaled(y, -1.0);
      z = y;

      SymMatrix diff = z;
      diff.add_scaled(z_prev, -1.0);
      gap = diff.frob_norm();
      if (gap < tol_) return z.flat();
    }
    throw std::runtime_error("SpectahedronSliceSet::project: Dykstra did not converge, last gap " +
                             std::to_string(gap));
  }

  /// Exact support via the two-multiplier semidefinite dual, reduced to a secular
  /// equation in the generalized eigenbasis of (G_block, W_block). The argmax is
  /// recovered rank-one from the null space of the optimal dual slack.
  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "SpectahedronSliceSet::support");
    const SymMatrix g = SymMatrix::from_flat(n_, dir);
    const int m = n_ - 1;

    // split G: block, off-corner column, corner
    SymMatrix gtl(m);
    Vec gcol(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      gcol[static_cast<std::size_t>(i)] = g(i, n_ - 1);
      for (int j = i; j < m; ++j) gtl.set(i, j, g(i, j));
    }
    Vec wcol(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) wcol[static_cast<std::size_t>(i)] = win_.w(i, n_ - 1);
    const double wnn = win_.w(n_ - 1, n_ - 1);
    const double gnn = g(n_ - 1, n_ - 1);

    // congruence to the basis where the window block is the identity
    // C = L^{-1} Gtl L^{-T}; eigen C = U nu U^T
    Matrix c_mat(m, m);
    {
      // columns of L^{-T}: solve L^T x = e_j
      Matrix linv_t(m, m);
      for (int j = 0; j < m; ++j) linv_t.set_col(j, backward_subst_t(ltl_, unit_vec(m, j)));
      Matrix tmp = gtl.to_general().mul(linv_t);  // Gtl L^{-T}
      // L^{-1} tmp: solve L y = tmp_col
      for (int j = 0; j < m; ++j) c_mat.set_col(j, forward_subst(ltl_, tmp.col(j)));
    }
    SymEigen ce = sym_eigen(SymMatrix::from_general(c_mat));
    const double nu_max = ce.values.back();

    // b in the same basis: beta = U^T L^{-1} (lambda*wcol - gcol); wcol part handled per lambda
    const Vec linv_g = forward_subst(ltl_, gcol);
    const Vec linv_w = forward_subst(ltl_, wcol);
    Vec beta_g(static_cast<std::size_t>(m)), beta_w(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      double sg = 0.0, sw = 0.0;
      for (int i = 0; i < m; ++i) {
        sg += ce.vectors(i, k) * linv_g[static_cast<std::size_t>(i)];
        sw += ce.vectors(i, k) * linv_w[static_cast<std::size_t>(i)];
      }
      beta_g[static_cast<std::size_t>(k)] = sg;
      beta_w[static_cast<std::size_t>(k)] = sw;
    }

    // dual objective g(lambda) = Gnn - lambda*Wnn + sum_k beta_k(lambda)^2/(lambda-nu_k) + psi(lambda)
    // with beta_k(lambda) = lambda*beta_w_k - beta_g_k  (off-corner column of lambda W - G).
    const double scale_ref = std::max({1.0, std::abs(nu_max), norm2(beta_g), norm2(beta_w)});
    auto dual_val = [&](double lam) {
      double s = gnn - lam * wnn + psi(lam);
      for (int k = 0; k < m; ++k) {
        const double b = lam * beta_w[static_cast<std::size_t>(k)] -
                         beta_g[static_cast<std::size_t>(k)];
        const double d = lam - ce.values[static_cast<std::size_t>(k)];
        if (d <= 0.0) {
          if (std::abs(b) <= 1e-12 * scale_ref) continue;
          return std::numeric_limits<double>::infinity();
        }
        s += b * b / d;
      }
      return s;
    };
    // derivative without the psi part; monotone increasing on each branch (g convex)
    auto dual_deriv0 = [&](double lam) {
      double s = -wnn;
      for (int k = 0; k < m; ++k) {
        const double bw = beta_w[static_cast<std::size_t>(k)];
        const double b = lam * bw - beta_g[static_cast<std::size_t>(k)];
        const double d = lam - ce.values[static_cast<std::size_t>(k)];
        if (d <= 0.0) {
          if (std::abs(b) <= 1e-12 * scale_ref) continue;
          return -std::numeric_limits<double>::infinity();
        }
        s += (2.0 * b * bw * d - b * b) / (d * d);
      }
      return s;
    };

    // convex 1-D minimization on (nu_max, inf) with a kink at 0 for two-sided windows;
    // the minimizer on each smooth branch is the root of the monotone derivative
    const double lo_edge = nu_max + 1e-14 * scale_ref;
    double lam_best = 0.0, val_best = std::numeric_limits<double>::infinity();
    auto consider = [&](double lam) {
      const double v = dual_val(lam);
      if (v < val_best) {
        val_best = v;
        lam_best = lam;
      }
    };
    auto minimize_branch = [&](double bl, double bh, double slope) {
      // widen bl until the derivative is finite (b in Range(A) edge)
      double a = bl;
      for (int guard = 0; guard < 60 && !std::isfinite(dual_deriv0(a)); ++guard)
        a = bl + (a - bl) * 2.0 + 1e-14 * scale_ref;
      if (dual_deriv0(a) + slope >= 0.0) {
        consider(a);
        return;
      }
      double b = std::isfinite(bh) ? bh : std::max(2.0 * std::abs(a) + scale_ref, 1.0);
      while (!std::isfinite(bh) && dual_deriv0(b) + slope < 0.0 && b < 1e18) b *= 4.0;
      if (dual_deriv0(b) + slope <= 0.0) {
        consider(b);
        return;
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        (dual_deriv0(mid) + slope < 0.0 ? a : b) = mid;
      }
      consider(0.5 * (a + b));
    };
    // branch lambda > max(0, nu_max): psi' = hi
    minimize_branch(std::max(lo_edge, 0.0), std::numeric_limits<double>::infinity(), win_.hi);
    // branch nu_max < lambda < 0 exists only for two-sided windows
    if (std::isfinite(win_.lo) && lo_edge < 0.0) {
      minimize_branch(lo_edge, 0.0, win_.lo);
      consider(0.0);
    }

    // primal recovery from the null space of M = y*E_nn + lambda*W - G.
    // With the window active the null space is generically two-dimensional
    // (two dual variables, two active eigenvalues); the argmax is then a blend
    // of the two null directions fixing both the corner and the window value.
    const double y_star = val_best - psi(lam_best);  // y = g(lam) - psi(lam)
    SymMatrix slack(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) slack.set(i, j, lam_best * win_.w(i, j) - g(i, j));
    slack.add_at(n_ - 1, n_ - 1, y_star);
    SymEigen se = sym_eigen(slack);
    const double eig_scale = std::max(std::abs(se.values.back()), 1.0);

    SupportResult r;
    r.value = val_best;
    Vec cand;
    const Vec q1 = se.vectors.col(0);
    const double q1n = q1[static_cast<std::size_t>(n_ - 1)];
    if (std::abs(q1n) > 1e-8) {
      SymMatrix z1 = rank_one_corner(q1);
      cand = z1.flat();
      const double s1 = win_.w.inner(z1);
      const bool window_ok = s1 <= win_.hi + 1e-9 * (1.0 + std::abs(win_.hi)) &&
                             (!std::isfinite(win_.lo) ||
                              s1 >= win_.lo - 1e-9 * (1.0 + std::abs(win_.lo)));
      if (!window_ok && n_ >= 2 &&
          se.values[1] < 1e-6 * eig_scale) {  // second null direction available
        const Vec q2 = se.vectors.col(1);
        const double q2n = q2[static_cast<std::size_t>(n_ - 1)];
        const double bound = s1 > win_.hi ? win_.hi : win_.lo;
        if (std::abs(q2n) > 1e-8) {
          SymMatrix z2 = rank_one_corner(q2);
          const double s2 = win_.w.inner(z2);
          if (std::abs(s2 - s1) > 1e-14) {
            const double tau = std::clamp((bound - s1) / (s2 - s1), 0.0, 1.0);
            z1 *= (1.0 - tau);
            z1.add_scaled(z2, tau);
            cand = z1.flat();
          }
        } else {
          // corner-free direction: additive PSD correction keeps the corner at 1
          SymMatrix qq(n_);
          for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j)
              qq.set(i, j, q2[static_cast<std::size_t>(i)] * q2[static_cast<std::size_t>(j)]);
          const double sw = win_.w.inner(qq);
          if (sw > 1e-14 && bound > s1) {
            z1.add_scaled(qq, (bound - s1) / sw);
            cand = z1.flat();
          }
        }
      }
    }
    if (!cand.empty()) {
      if (!contains(cand, 1e-9 * std::max(1.0, win_.hi))) cand = project(cand);
      const double attained = dot(dir, cand);
      if (attained < r.value - 1e-6 * (1.0 + std::abs(r.value))) cand.clear();
    }
    if (cand.empty()) cand = ascent_polish(dir);  // degenerate multiplicity
    r.argmax = std::move(cand);
    // weak duality guarantees value >= attained up to roundoff; keep the dual value
    // as the reported (conservative) support value
    r.value = std::max(r.value, dot(dir, r.argmax));
    return r;
  }

  bool exact_linear_oracle() const override { return true; }

  Vec interior_point() const override {
    SymMatrix z(n_);
    z.set(n_ - 1, n_ - 1, 1.0);
    double ttl = 0.0;
    for (int i = 0; i + 1 < n_; ++i) ttl += win_.w(i, i);
    const double lo_eff = std::isfinite(win_.lo) ? std::max(win_.lo, win_.w(n_ - 1, n_ - 1))
                                                 : win_.w(n_ - 1, n_ - 1);
    const double target = 0.5 * (lo_eff + win_.hi);
    const double s = std::max((target - win_.w(n_ - 1, n_ - 1)) / std::max(ttl, 1e-300), 1e-12);
    for (int i = 0; i + 1 < n_; ++i) z.set(i, i, s);
    return z.flat();
  }

  double diameter_hint() const override { return wfree_; }

  const TraceWindow& window() const { return win_; }

 private:
  static double eigen_min_wtl(const SymMatrix& wtl) { return sym_eigen(wtl).values.front(); }

  /// (q/q_n)(q/q_n)^T: rank-one member candidate with corner pinned to 1.
  SymMatrix rank_one_corner(Vec q) const {
    scale(q, 1.0 / q[static_cast<std::size_t>(n_ - 1)]);
    SymMatrix z(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j)
        z.set(i, j, q[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(j)]);
    return z;
  }

  double psi(double lam) const {
    if (lam >= 0.0) return win_.hi * lam;
    return std::isfinite(win_.lo) ? win_.lo * lam : std::numeric_limits<double>::infinity();
  }

  SymMatrix project_window(const SymMatrix& z) const {
    const double t = win_.w.inner(z);
    double target = t;
    if (t > win_.hi) target = win_.hi;
    if (std::isfinite(win_.lo) && t < win_.lo) target = win_.lo;
    if (target == t) return z;
    SymMatrix out = z;
    const double wnorm2 = win_.w.inner(win_.w);
    out.add_scaled(win_.w, (target - t) / wnorm2);
    return out;
  }

  Vec ascent_polish(const Vec& dir) const {
    Vec z = interior_point();
    Vec best = z;
    double fbest = dot(dir, z);
    const double step0 = diameter_hint() / std::max(norm2(dir), 1e-300);
    for (int t = 1; t <= 2000; ++t) {
      Vec cand = z;
      axpy(step0 / std::sqrt(static_cast<double>(t)), dir, cand);
      z = project(cand);
      const double f = dot(dir, z);
      if (f > fbest) {
        fbest = f;
        best = z;
      }
    }
    return best;
  }

  int n_;
  TraceWindow win_;
  int max_iter_;
  double tol_;
  Matrix ltl_;    // Cholesky factor of the window weight restricted to the block
  double wfree_;  // diameter bound implied by the window
};

// ---------------------------------------------------------------- Singleton

class SingletonSet final : public ConvexSet {
 public:
  explicit SingletonSet(Vec x0) : x0_(std::move(x0)) {}
  static SetPtr make(Vec x0) { return std::make_shared<SingletonSet>(std::move(x0)); }

  SetKind kind() const override { return SetKind::Singleton; }
  int dim() const override { return static_cast<int>(x0_.size()); }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "SingletonSet::contains");
    return norm2(sub(p, x0_)) <= tol;
  }
  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "SingletonSet::support");
    return {dot(dir, x0_), x0_};
  }
  Vec project(const Vec& p) const override {
    check_dim(p, "SingletonSet::project");
    return x0_;
  }
  Vec interior_point() const override { return x0_; }
  double diameter_hint() const override { return 0.0; }

 private:
  Vec x0_;
};

// ---------------------------------------------------------------- Product

/// Direct product of blocks; oracles act blockwise (blockwise projection is the
/// exact Euclidean projection onto a product).
class ProductSet final : public ConvexSet {
 public:
  explicit ProductSet(std::vector<SetPtr> parts) : parts_(std::move(parts)) {
    for (const auto& p : parts_)
      if (!p) throw std::invalid_argument("ProductSet: null component");
    dim_ = 0;
    for (const auto& p : parts_) dim_ += p->dim();
  }
  static SetPtr make(std::vector<SetPtr> parts) {
    return std::make_shared<ProductSet>(std::move(parts));
  }

  SetKind kind() const override { return SetKind::Product; }
  int dim() const override { return dim_; }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "ProductSet::contains");
    std::size_t off = 0;
    for (const auto& part : parts_) {
      Vec block(p.begin() + off, p.begin() + off + part->dim());
      if (!part->contains(block, tol)) return false;
      off += static_cast<std::size_t>(part->dim());
    }
    return true;
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "ProductSet::support");
    SupportResult r{0.0, Vec()};
    r.argmax.reserve(dir.size());
    std::size_t off = 0;
    for (const auto& part : parts_) {
      Vec block(dir.begin() + off, dir.begin() + off + part->dim());
      SupportResult br = part->support(block);
      r.value += br.value;
      r.argmax.insert(r.argmax.end(), br.argmax.begin(), br.argmax.end());
      off += static_cast<std::size_t>(part->dim());
    }
    return r;
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "ProductSet::project");
    Vec out;
    out.reserve(p.size());
    std::size_t off = 0;
    for (const auto& part : parts_) {
      Vec block(p.begin() + off, p.begin() + off + part->dim());
      Vec pb = part->project(block);
      out.insert(out.end(), pb.begin(), pb.end());
      off += static_cast<std::size_t>(part->dim());
    }
    return out;
  }

  Vec linear_oracle(const Vec& c) const override {
    check_dim(c, "ProductSet::linear_oracle");
    Vec out;
    out.reserve(c.size());
    std::size_t off = 0;
    for (const auto& part : parts_) {
      Vec block(c.begin() + off, c.begin() + off + part->dim());
      Vec pb = part->linear_oracle(block);
      out.insert(out.end(), pb.begin(), pb.end());
      off += static_cast<std::size_t>(part->dim());
    }
    return out;
  }

  bool exact_linear_oracle() const override {
    for (const auto& p : parts_)
      if (!p->exact_linear_oracle()) return false;
    return true;
  }

  Vec interior_point() const override {
    Vec out;
    out.reserve(static_cast<std::size_t>(dim_));
    for (const auto& p : parts_) {
      Vec ip = p->interior_point();
      out.insert(out.end(), ip.begin(), ip.end());
    }
    return out;
  }

  double diameter_hint() const override {
    double d2 = 0.0;
    for (const auto& p : parts_) {
      const double d = p->diameter_hint();
      d2 += d * d;
    }
    return std::sqrt(d2);
  }

  const std::vector<SetPtr>& parts() const { return parts_; }

 private:
  std::vector<SetPtr> parts_;
  int dim_ = 0;
};

// ---------------------------------------------------------------- AffinePreimage

/// { x : s Q x + b in base } for orthogonal Q and s > 0. The map is a scaled
/// isometry, so support, projection and extreme points transport exactly.
/// PD-quadratic preimages are covered by EllipsoidSet instead.
class AffinePreimageSet final : public ConvexSet {
 public:
  AffinePreimageSet(SetPtr base, Matrix q, double s, Vec b)
      : base_(std::move(base)), q_(std::move(q)), s_(s), b_(std::move(b)) {
    if (!base_) throw std::invalid_argument("AffinePreimageSet: null base");
    if (s_ <= 0.0) throw std::invalid_argument("AffinePreimageSet: scale must be positive");
    if (q_.rows() != base_->dim() || q_.cols() != base_->dim())
      throw std::invalid_argument("AffinePreimageSet: map shape mismatch");
    check_same_dim(b_.size(), static_cast<std::size_t>(base_->dim()), "AffinePreimageSet");
    // orthogonality check
    Matrix qtq = q_.transposed().mul(q_);
    for (int i = 0; i < qtq.rows(); ++i)
      for (int j = 0; j < qtq.cols(); ++j)
        if (std::abs(qtq(i, j) - (i == j ? 1.0 : 0.0)) > 1e-10)
          throw std::invalid_argument("AffinePreimageSet: map must be (scaled) orthogonal");
  }
  static SetPtr make(SetPtr base, Matrix q, double s, Vec b) {
    return std::make_shared<AffinePreimageSet>(std::move(base), std::move(q), s, std::move(b));
  }

  SetKind kind() const override { return SetKind::AffinePreimage; }
  int dim() const override { return q_.cols(); }

  bool contains(const Vec& p, double tol) const override {
    check_dim(p, "AffinePreimageSet::contains");
    return base_->contains(fwd(p), tol * s_);
  }

  SupportResult support(const Vec& dir) const override {
    check_dim(dir, "AffinePreimageSet::support");
    // <c,x> = <Q c, y-b>/s over y in base
    Vec qc = q_.mul(dir);
    SupportResult br = base_->support(qc);
    SupportResult r;
    r.value = (br.value - dot(qc, b_)) / s_;
    r.argmax = inv(br.argmax);
    return r;
  }

  Vec project(const Vec& p) const override {
    check_dim(p, "AffinePreimageSet::project");
    return inv(base_->project(fwd(p)));
  }

  Vec linear_oracle(const Vec& c) const override {
    check_dim(c, "AffinePreimageSet::linear_oracle");
    return inv(base_->linear_oracle(q_.mul(c)));
  }
  bool exact_linear_oracle() const override { return base_->exact_linear_oracle(); }

  Vec interior_point() const override { return inv(base_->interior_point()); }
  double diameter_hint() const override { return base_->diameter_hint() / s_; }

 private:
  Vec fwd(const Vec& x) const {
    Vec y = q_.mul(x);
    scale(y, s_);
    axpy(1.0, b_, y);
    return y;
  }
  Vec inv(const Vec& y) const {
    Vec t = sub(y, b_);
    Vec x = q_.tmul(t);
    scale(x, 1.0 / s_);
    return x;
  }

  SetPtr base_;
  Matrix q_;
  double s_;
  Vec b_;
};

}  // namespace minimax
