#pragma once

// Generic construction of certified affine estimates: the risk components
//   Psi_+(f,alpha) = sup_{x in X} [ alpha Phi(f/alpha; A(x)) - G(x) ]
//   PsiHat_+(f)    = inf_{alpha>0} { Psi_+(f,alpha) + alpha ln(2/eps)/K }
// (and the mirrored minus versions), the estimate (f, kappa, rho) with
//   rho = (PsiHat_+ + PsiHat_-)/2,  kappa = (PsiHat_- - PsiHat_+)/2,
// and its optimization by projected subgradient. Any candidate f yields a valid
// certificate; optimality only shrinks rho.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "minimax/convex_sets.hpp"
#include "minimax/linalg.hpp"
#include "minimax/rng.hpp"
#include "minimax/solvers.hpp"

namespace minimax {

/// A simple family bound to an affine signal parametrization: everything the
/// generic machinery needs of Phi(f; A(x)).
class FamilyOnSignal {
 public:
  virtual ~FamilyOnSignal() = default;
  virtual int obs_dim() const = 0;
  virtual int signal_dim() const = 0;
  virtual double phi(const Vec& f, const Vec& x) const = 0;
  virtual Vec grad_f(const Vec& f, const Vec& x) const = 0;
  /// supergradient of x -> Phi(f; A(x))
  virtual Vec supergrad_x(const Vec& f, const Vec& x) const = 0;
  /// whether A(x) lies in the family's concave domain (probed by validation)
  virtual bool domain_ok(const Vec& x, double tol) const = 0;
  virtual void digest_into(Digest& d) const = 0;
};

struct LinearFunctional {
  Vec g;
  double c = 0.0;
  double operator()(const Vec& x) const { return dot(g, x) + c; }
};

struct EstimationProblem {
  std::shared_ptr<const FamilyOnSignal> family;
  LinearFunctional G;
  SetPtr X;
  double epsilon = 0.01;
  int K = 1;

  double log_term() const { return std::log(2.0 / epsilon); }

  std::string digest() const {
    Digest d;
    family->digest_into(d);
    d.add(G.g).add(G.c).add(epsilon).add(K).add(X->dim());
    return d.hex();
  }

  /// Probes A(x) at support points of X in 100 seeded directions; throws when a
  /// probe leaves the family's concave domain.
  void validate(double tol = 1e-9) const {
    if (epsilon <= 0.0 || epsilon >= 1.0)
      throw std::invalid_argument("EstimationProblem: epsilon must lie in (0,1)");
    if (K < 1) throw std::invalid_argument("EstimationProblem: K >= 1 required");
    check_same_dim(G.g.size(), static_cast<std::size_t>(X->dim()), "EstimationProblem");
    RngStream rng(20240517, 0);
    for (int t = 0; t < 100; ++t) {
      const Vec x = X->support(rng.gaussian_vec(X->dim())).argmax;
      if (!family->domain_ok(x, tol))
        throw std::domain_error("EstimationProblem: A(x) left the concave domain at a probe");
    }
  }
};

struct AffineEstimate {
  Vec f;
  double kappa = 0.0;
  double rho = 0.0;
  double epsilon = 0.01;
  int K = 1;
  std::string problem_digest;
  bool stalled = false;

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", "affine"}, {"f", f},       {"kappa", kappa},
                          {"rho", rho},       {"epsilon", epsilon}, {"K", K},
                          {"problem_digest", problem_digest}};
  }

  static AffineEstimate from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "affine")
      throw std::invalid_argument("AffineEstimate: wrong kind");
    AffineEstimate e;
    e.f = j.at("f").get<Vec>();
    e.kappa = j.at("kappa").get<double>();
    e.rho = j.at("rho").get<double>();
    e.epsilon = j.at("epsilon").get<double>();
    e.K = j.at("K").get<int>();
    e.problem_digest = j.at("problem_digest").get<std::string>();
    return e;
  }
};

struct PsiValue {
  double value = 0.0;   // conservative (includes the inner gap)
  double alpha = 1.0;   // minimizing alpha
  Vec x;                // inner argmax
  double gap = 0.0;
};

/// Psi_+/-(f, alpha): sup over X of alpha Phi(+-f/alpha; A(x)) -+ G(x).
/// The supremum is conservative: the inner solver's certified gap is added.
inline PsiValue psi_plus(const EstimationProblem& prob, const Vec& f, double alpha, int sign,
                         const SolverConfig& cfg = SolverConfig()) {
  const Vec fs = scaled(f, static_cast<double>(sign) / alpha);
  ConcaveOracle oracle = [&](const Vec& x) {
    ConcaveEval e;
    e.value = alpha * prob.family->phi(fs, x) - sign * prob.G(x);
    e.supergrad = scaled(prob.family->supergrad_x(fs, x), alpha);
    axpy(-static_cast<double>(sign), prob.G.g, e.supergrad);
    return e;
  };
  SolveReport rep = inner_max(oracle, *prob.X, cfg);
  if (rep.stalled && rep.gap_estimate > 1e3 * cfg.inner_tol * (1.0 + std::abs(rep.value)))
    throw std::runtime_error("psi_plus: inner solver stalled, duality gap " +
                             std::to_string(rep.gap_estimate));
  PsiValue v;
  v.value = rep.value + rep.gap_estimate;
  v.alpha = alpha;
  v.x = std::move(rep.arg);
  v.gap = rep.gap_estimate;
  return v;
}

/// PsiHat_{sign}(f): golden section over ln(alpha) on [1e-6, 1e6] (expanded when
/// the pattern demands) refined to relative width 1e-8; the alpha objective is
/// convex by the perspective construction.
inline PsiValue psi_hat(const EstimationProblem& prob, const Vec& f, int sign,
                        const SolverConfig& cfg = SolverConfig()) {
  const double w = prob.log_term() / static_cast<double>(prob.K);
  auto objective = [&](double alpha) {
    return psi_plus(prob, f, alpha, sign, cfg).value + alpha * w;
  };
  const Golden1D r = golden_min_log(objective, 1e-6, 1e6, 1e-8);
  PsiValue v = psi_plus(prob, f, r.x, sign, cfg);
  v.value += r.x * w;
  v.alpha = r.x;
  return v;
}

/// (f, kappa, rho) from any candidate f; the certificate system
/// PsiHat_+ <= rho - kappa, PsiHat_- <= rho + kappa is re-verified.
inline AffineEstimate build_estimate(const EstimationProblem& prob, const Vec& f,
                                     const SolverConfig& cfg = SolverConfig()) {
  const PsiValue plus = psi_hat(prob, f, +1, cfg);
  const PsiValue minus = psi_hat(prob, f, -1, cfg);
  AffineEstimate est;
  est.f = f;
  est.kappa = 0.5 * (minus.value - plus.value);
  est.rho = 0.5 * (plus.value + minus.value);
  est.epsilon = prob.epsilon;
  est.K = prob.K;
  est.problem_digest = prob.digest();
  const double slack = 1e-7 * (1.0 + std::abs(est.rho));
  if (plus.value > est.rho - est.kappa + slack || minus.value > est.rho + est.kappa + slack)
    throw std::logic_error("build_estimate: certificate system violated");
  return est;
}

/// Minimize PsiHat(f) = (PsiHat_+ + PsiHat_-)/2 by projected subgradient from
/// f = 0 (always feasible: 0 is interior to the family domain). The returned rho
/// is a valid bound at the best iterate regardless of optimality.
inline AffineEstimate optimize(const EstimationProblem& prob,
                               const SolverConfig& cfg = SolverConfig()) {
  ConvexOracle oracle = [&](const Vec& f) {
    const PsiValue plus = psi_hat(prob, f, +1, cfg);
    const PsiValue minus = psi_hat(prob, f, -1, cfg);
    ConvexEval e;
    e.value = 0.5 * (plus.value + minus.value);
    // Danskin: d/df [alpha Phi(+-f/alpha; A(x*))] = +-grad_f Phi at (+-f/alpha, x*)
    const Vec gp = prob.family->grad_f(scaled(f, 1.0 / plus.alpha), plus.x);
    const Vec gm = prob.family->grad_f(scaled(f, -1.0 / minus.alpha), minus.x);
    e.subgrad = scaled(sub(gp, gm), 0.5);
    return e;
  };
  SolveReport rep = outer_min(oracle, zeros(prob.family->obs_dim()), nullptr, cfg, 0.0);
  AffineEstimate est = build_estimate(prob, rep.arg, cfg);
  est.stalled = rep.stalled;
  return est;
}

/// ghat(omega^K) = <f, mean of observations> + kappa.
inline double apply(const AffineEstimate& est, const std::vector<Vec>& obs) {
  if (static_cast<int>(obs.size()) != est.K)
    throw std::invalid_argument("apply: expected " + std::to_string(est.K) +
                                " observations, got " + std::to_string(obs.size()));
  Vec mean = zeros(static_cast<int>(est.f.size()));
  for (const Vec& o : obs) axpy(1.0 / static_cast<double>(obs.size()), o, mean);
  return dot(est.f, mean) + est.kappa;
}

}  // namespace minimax
