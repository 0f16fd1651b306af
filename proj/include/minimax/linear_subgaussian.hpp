#pragma once

// Sub-Gaussian linear estimation: observations omega ~ SG(Ax + a, M(x)) with
// M(x) = M0 + sum_j x_j M_j, target G(x) = g'x + c. The alpha minimization of
// the generic machinery collapses here to the closed forms
//   PsiHat_+(f) = max_x { sqrt(2 ln(2/eps)/K f'M(x)f) + f'Ax - G(x) } + a'f,
//   PsiHat_-(f) = max_x { sqrt(2 ln(2/eps)/K f'M(x)f) - f'Ax + G(x) } - a'f,
// which are evaluated exactly on boxes and by Frank-Wolfe elsewhere.

#include <memory>
#include <vector>

#include "minimax/affine_estimator.hpp"
#include "minimax/convex_sets.hpp"
#include "minimax/linalg.hpp"
#include "minimax/lower_bounds.hpp"
#include "minimax/rng.hpp"
#include "minimax/solvers.hpp"

namespace minimax {

struct SubGaussLinearProblem {
  Matrix A;   // d x n
  Vec a;      // d
  SymMatrix M0;
  std::vector<SymMatrix> Mk;  // empty means M(x) == M0
  Vec g;
  double c = 0.0;
  SetPtr X;
  double epsilon = 0.01;
  int K = 1;

  int obs_dim() const { return A.rows(); }
  int signal_dim() const { return A.cols(); }
  double noise_weight() const { return 2.0 * std::log(2.0 / epsilon) / static_cast<double>(K); }

  SymMatrix M_at(const Vec& x) const {
    SymMatrix m = M0;
    for (std::size_t j = 0; j < Mk.size(); ++j) m.add_scaled(Mk[j], x[j]);
    return m;
  }

  std::string digest() const {
    Digest d;
    d.add(A).add(a).add(M0);
    d.add(static_cast<int>(Mk.size()));
    for (const auto& m : Mk) d.add(m);
    d.add(g).add(c).add(epsilon).add(K);
    return d.hex();
  }

  /// M(x) must stay PSD (>= -1e-9) over X; probed at 100 seeded support points.
  void validate() const {
    if (!Mk.empty())
      check_same_dim(Mk.size(), static_cast<std::size_t>(signal_dim()),
                     "SubGaussLinearProblem: Mk count");
    RngStream rng(987001, 0);
    for (int t = 0; t < 100; ++t) {
      const Vec x = X->support(rng.gaussian_vec(signal_dim())).argmax;
      const SymEigen e = sym_eigen(M_at(x));
      if (e.values.front() < -1e-9 * std::max(1.0, e.values.back()))
        throw std::domain_error("SubGaussLinearProblem: M(x) indefinite at a probe");
    }
  }
};

/// Adapter exposing the sub-Gaussian model to the generic affine-estimator
/// machinery (the alpha-search route; the closed forms below are the fast path).
class SubGaussOnSignal final : public FamilyOnSignal {
 public:
  explicit SubGaussOnSignal(SubGaussLinearProblem prob) : p_(std::move(prob)) {}

  int obs_dim() const override { return p_.obs_dim(); }
  int signal_dim() const override { return p_.signal_dim(); }

  double phi(const Vec& f, const Vec& x) const override {
    Vec mean = p_.A.mul(x);
    axpy(1.0, p_.a, mean);
    return dot(f, mean) + 0.5 * p_.M_at(x).quad_form(f);
  }

  Vec grad_f(const Vec& f, const Vec& x) const override {
    Vec gr = p_.A.mul(x);
    axpy(1.0, p_.a, gr);
    axpy(1.0, p_.M_at(x).mul(f), gr);
    return gr;
  }

  Vec supergrad_x(const Vec& f, const Vec& x) const override {
    (void)x;  // Phi is affine in x
    Vec gr = p_.A.tmul(f);
    for (std::size_t j = 0; j < p_.Mk.size(); ++j) gr[j] += 0.5 * p_.Mk[j].quad_form(f);
    return gr;
  }

  bool domain_ok(const Vec& x, double tol) const override {
    const SymEigen e = sym_eigen(p_.M_at(x));
    return e.values.front() >= -tol * std::max(1.0, std::abs(e.values.back()));
  }

  void digest_into(Digest& d) const override {
    d.add(p_.A).add(p_.a).add(p_.M0);
    for (const auto& m : p_.Mk) d.add(m);
  }

  const SubGaussLinearProblem& problem() const { return p_; }

 private:
  SubGaussLinearProblem p_;
};

inline EstimationProblem to_estimation_problem(const SubGaussLinearProblem& p) {
  EstimationProblem e;
  e.family = std::make_shared<SubGaussOnSignal>(p);
  e.G = LinearFunctional{p.g, p.c};
  e.X = p.X;
  e.epsilon = p.epsilon;
  e.K = p.K;
  return e;
}

/// Closed-form PsiHat_{sign}(f). Exact (multiplier-scan) maximization on boxes;
/// Frank-Wolfe with its certified gap added on other set kinds.
inline PsiValue psi_hat_closed(const SubGaussLinearProblem& p, const Vec& f, int sign,
                               const SolverConfig& cfg = SolverConfig()) {
  const double ck = p.noise_weight();
  const double sgn = static_cast<double>(sign);
  // s(x) = f'M(x)f = m0 + <m, x>;  objective sqrt(ck s(x)) + <lin, x> + const
  const double m0 = p.M0.quad_form(f);
  Vec m(static_cast<std::size_t>(p.signal_dim()), 0.0);
  for (std::size_t j = 0; j < p.Mk.size(); ++j) m[j] = p.Mk[j].quad_form(f);
  Vec lin = p.A.tmul(f);
  scale(lin, sgn);
  axpy(-sgn, p.g, lin);
  const double cnst = sgn * (dot(p.a, f) - p.c);
  auto phi = [&](double s) { return std::sqrt(std::max(ck * s, 0.0)); };

  PsiValue v;
  if (p.X->kind() == SetKind::Box) {
    const auto& box = static_cast<const BoxSet&>(*p.X);
    auto r = max_box_affine_plus_concave(box.lower(), box.upper(), lin, m, m0, phi);
    v.value = r.value + cnst;
    v.x = std::move(r.argmax);
    return v;
  }
  ConcaveOracle oracle = [&](const Vec& x) {
    const double s = m0 + dot(m, x);
    ConcaveEval e;
    e.value = phi(s) + dot(lin, x);
    e.supergrad = lin;
    if (s > 1e-300) axpy(0.5 * ck / phi(s), m, e.supergrad);
    return e;
  };
  SolveReport rep = inner_max(oracle, *p.X, cfg);
  v.value = rep.value + rep.gap_estimate + cnst;
  v.gap = rep.gap_estimate;
  v.x = std::move(rep.arg);
  return v;
}

/// Minimize the closed-form PsiHat objective by projected subgradient; any
/// iterate certifies, the best one is returned.
inline AffineEstimate optimize_closed(const SubGaussLinearProblem& p,
                                      const SolverConfig& cfg = SolverConfig()) {
  const double ck = p.noise_weight();
  ConvexOracle oracle = [&](const Vec& f) {
    const PsiValue plus = psi_hat_closed(p, f, +1, cfg);
    const PsiValue minus = psi_hat_closed(p, f, -1, cfg);
    ConvexEval e;
    e.value = 0.5 * (plus.value + minus.value);
    e.subgrad = zeros(p.obs_dim());
    for (const auto& [x, sgn] : {std::pair{plus.x, 1.0}, std::pair{minus.x, -1.0}}) {
      const SymMatrix mx = p.M_at(x);
      const double s = mx.quad_form(f);
      if (s > 1e-300) axpy(0.5 * ck / std::sqrt(ck * s), mx.mul(f), e.subgrad);
      Vec mean = p.A.mul(x);
      axpy(1.0, p.a, mean);
      axpy(0.5 * sgn, mean, e.subgrad);
    }
    return e;
  };
  SolveReport rep = outer_min(oracle, zeros(p.obs_dim()), nullptr, cfg, 0.0);
  const PsiValue plus = psi_hat_closed(p, rep.arg, +1, cfg);
  const PsiValue minus = psi_hat_closed(p, rep.arg, -1, cfg);
  AffineEstimate est;
  est.f = rep.arg;
  est.kappa = 0.5 * (minus.value - plus.value);
  est.rho = 0.5 * (plus.value + minus.value);
  est.epsilon = p.epsilon;
  est.K = p.K;
  est.problem_digest = p.digest();
  est.stalled = rep.stalled;
  return est;
}

// ---------------------------------------------------------------- direct product

struct DirectProductResult {
  Vec f;
  double kappa = 0.0;
  double opt = 0.0;
  bool stalled = false;
};

/// Direct product case: signals (u, v) in U x V, observation SG(Au + a, M(v)),
/// target g'u + c. Minimizes
///   [phi_U(A'f - g) + phi_U(g - A'f)]/2 + max_{v in V} sqrt(ck f'M(v)f)
/// and returns the optimizer with its shift kappa* and value Opt.
inline DirectProductResult direct_product_opt(const SetPtr& u_set, const SetPtr& v_set,
                                              const Matrix& a_mat, const Vec& a_shift,
                                              const SymMatrix& m0_v,
                                              const std::vector<SymMatrix>& mk_v, const Vec& g,
                                              double c, double epsilon, int k_reps,
                                              const SolverConfig& cfg = SolverConfig()) {
  const double ck = 2.0 * std::log(2.0 / epsilon) / static_cast<double>(k_reps);
  auto noise_sup = [&](const Vec& f) {
    // max_v f'M(v)f is a support-function call: the map v -> f'M(v)f is affine
    double s = m0_v.quad_form(f);
    Vec coef(static_cast<std::size_t>(v_set->dim()), 0.0);
    for (std::size_t j = 0; j < mk_v.size(); ++j) coef[j] = mk_v[j].quad_form(f);
    SupportResult sup = v_set->support(coef);
    return std::pair<double, Vec>(s + sup.value, std::move(sup.argmax));
  };
  ConvexOracle oracle = [&](const Vec& f) {
    Vec atf = a_mat.tmul(f);
    Vec d_plus = sub(atf, g);
    const SupportResult su_p = u_set->support(d_plus);
    const SupportResult su_m = u_set->support(scaled(d_plus, -1.0));
    auto [s_noise, v_star] = noise_sup(f);
    ConvexEval e;
    e.value = 0.5 * (su_p.value + su_m.value) + std::sqrt(std::max(ck * s_noise, 0.0));
    e.subgrad = a_mat.mul(sub(su_p.argmax, su_m.argmax));
    scale(e.subgrad, 0.5);
    if (s_noise > 1e-300) {
      SymMatrix mv = m0_v;
      for (std::size_t j = 0; j < mk_v.size(); ++j) mv.add_scaled(mk_v[j], v_star[j]);
      axpy(ck / (2.0 * std::sqrt(ck * s_noise)), mv.mul(f), e.subgrad);
    }
    return e;
  };
  SolveReport rep = outer_min(oracle, zeros(a_mat.rows()), nullptr, cfg, 0.0);
  DirectProductResult out;
  out.f = rep.arg;
  out.opt = rep.value;
  out.stalled = rep.stalled;
  Vec atf = a_mat.tmul(out.f);
  const double phi_minus = u_set->support(sub(g, atf)).value;
  const double phi_plus = u_set->support(sub(atf, g)).value;
  out.kappa = 0.5 * (phi_minus - phi_plus) - dot(a_shift, out.f) - c;
  return out;
}

// ---------------------------------------------------------------- consistency

/// Whether g is orthogonal to Ker(A) intersected with span(X - X): the
/// necessary-and-sufficient condition for the risk to vanish as K grows.
/// The span is estimated from support-point differences; ranks are cut at the
/// resolution of the normal-matrix route (~1e-7 relative singular value).
inline bool consistency_check(const Vec& g, const Matrix& a_mat, const ConvexSet& x_set) {
  const int n = a_mat.cols();
  check_same_dim(g.size(), static_cast<std::size_t>(n), "consistency_check");
  const Matrix ker = nullspace_basis(a_mat);
  if (ker.cols() == 0) return true;

  // span(X - X) from coordinate and seeded random support directions
  RngStream rng(424243, 0);
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back(x_set.support(unit_vec(n, i)).argmax);
    pts.push_back(x_set.support(scaled(unit_vec(n, i), -1.0)).argmax);
  }
  for (int t = 0; t < 2 * n; ++t) pts.push_back(x_set.support(rng.gaussian_vec(n)).argmax);
  Matrix diffs(n, static_cast<int>(pts.size()) - 1);
  for (std::size_t i = 1; i < pts.size(); ++i)
    diffs.set_col(static_cast<int>(i) - 1, sub(pts[i], pts[0]));
  const int rank = orthonormalize_columns(diffs, 1e-9);
  if (rank == 0) return true;  // X is a point

  // intersection of col(ker) and col(diffs) via the nullspace of [ker | -diffs]
  Matrix stacked(n, ker.cols() + rank);
  for (int j = 0; j < ker.cols(); ++j) stacked.set_col(j, ker.col(j));
  for (int j = 0; j < rank; ++j) stacked.set_col(ker.cols() + j, scaled(diffs.col(j), -1.0));
  const Matrix z = nullspace_basis(stacked);
  if (z.cols() == 0) return true;
  Matrix inter(n, z.cols());
  for (int j = 0; j < z.cols(); ++j) {
    Vec z1(static_cast<std::size_t>(ker.cols()));
    for (int i = 0; i < ker.cols(); ++i) z1[static_cast<std::size_t>(i)] = z(i, j);
    inter.set_col(j, ker.mul(z1));
  }
  const int idim = orthonormalize_columns(inter);
  double proj2 = 0.0;
  for (int j = 0; j < idim; ++j) {
    const double w = dot(inter.col(j), g);
    proj2 += w * w;
  }
  return std::sqrt(proj2) <= 1e-8 * std::max(norm2(g), 1e-300);
}

/// Provable multiplicative gap between the affine risk and the minimax risk:
/// sqrt(2 ln(2/eps)) / q_N(1 - eps), only meaningful for eps < 1/2.
inline double near_opt_factor(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw std::domain_error("near_opt_factor: epsilon must lie in (0, 1/2)");
  return std::sqrt(2.0 * std::log(2.0 / epsilon)) / gauss_quantile(1.0 - epsilon);
}

// ---------------------------------------------------------------- generator

struct GeneratedLinearProblem {
  SubGaussLinearProblem exact;     // M(x) = sigma^2 sum_j x_j Theta_j
  SubGaussLinearProblem envelope;  // M(x) == M(xbar), xbar the >=-largest point
  std::vector<SymMatrix> projectors;
  Vec singular_values;
};

/// Random estimation problems with deficient observations (n > d), geometric
/// singular spectrum, decaying box signal set and projector-mixture noise whose
/// intensity scales with the signal.
inline GeneratedLinearProblem gen_problem(int d, int n, double alpha, double cond_theta,
                                          double sigma, std::uint64_t seed) {
  if (n <= d) throw std::invalid_argument("gen_problem: n > d (deficient observations) required");
  if (cond_theta < 1.0) throw std::invalid_argument("gen_problem: cond >= 1 required");
  RngStream root(seed, 0);

  auto random_frame = [&](RngStream rng, int rows, int cols) {
    Matrix f(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) f(i, j) = rng.next_gaussian();
    orthonormalize_columns(f);
    return f;
  };

  const Matrix u = random_frame(root.fork(1), d, d);
  const Matrix v = random_frame(root.fork(2), n, d);  // first d right singular vectors
  Vec sv(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    sv[static_cast<std::size_t>(i)] =
        std::pow(cond_theta, -static_cast<double>(i) / static_cast<double>(d - 1));
  Matrix a_mat(d, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += u(i, k) * sv[static_cast<std::size_t>(k)] * v(j, k);
      a_mat(i, j) = s;
    }

  Vec upper(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    upper[static_cast<std::size_t>(j)] = std::pow(static_cast<double>(j + 1), -alpha);
  SetPtr x_box = BoxSet::make(zeros(n), upper);

  RngStream grng = root.fork(3);
  Vec g = grng.uniform_vec(n);
  const double sup_g = x_box->support(g).value;
  scale(g, 2.0 / sup_g);

  const int rank = d / 2;
  std::vector<SymMatrix> projectors;
  std::vector<SymMatrix> mk;
  SymMatrix m_bar(d);
  for (int j = 0; j < n; ++j) {
    const Matrix q = random_frame(root.fork(4 + static_cast<std::uint64_t>(j)), d, rank);
    SymMatrix pj(d);
    for (int r = 0; r < d; ++r)
      for (int s = r; s < d; ++s) {
        double acc = 0.0;
        for (int k = 0; k < rank; ++k) acc += q(r, k) * q(s, k);
        pj.set(r, s, acc);
      }
    projectors.push_back(pj);
    SymMatrix scaled_pj = pj;
    scaled_pj *= sigma * sigma;
    mk.push_back(scaled_pj);
    m_bar.add_scaled(scaled_pj, upper[static_cast<std::size_t>(j)]);
  }

  GeneratedLinearProblem out;
  out.projectors = std::move(projectors);
  out.singular_values = sv;
  out.exact = SubGaussLinearProblem{a_mat, zeros(d), SymMatrix(d), mk, g, 0.0, x_box, 0.01, 1};
  out.envelope = SubGaussLinearProblem{a_mat, zeros(d), m_bar, {}, g, 0.0, x_box, 0.01, 1};
  return out;
}

}  // namespace minimax
