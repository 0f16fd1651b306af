#include <gtest/gtest.h>

#include <cmath>

#include "minimax/convex_sets.hpp"
#include "minimax/rng.hpp"
#include "minimax/solvers.hpp"

using namespace minimax;

TEST(Golden, Parabola) {
  auto r = golden_min_1d([](double x) { return (x - 2.0) * (x - 2.0); }, 0.0, 10.0, 1e-10);
  EXPECT_NEAR(r.x, 2.0, 1e-8);
}

TEST(Golden, AmGm) {
  auto r = golden_min_1d([](double x) { return x + 1.0 / x; }, 0.01, 100.0, 1e-12);
  // argmin localization is limited to ~sqrt(machine eps) by the flat quadratic bottom
  EXPECT_NEAR(r.x, 1.0, 1e-7);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
}

// the alpha-optimization shape of the sub-Gaussian risk objective:
// alpha ln(2/eps) + c/alpha has argmin sqrt(c/ln(2/eps))  [calculus oracle]
TEST(Golden, AlphaSearchShape) {
  const double eps = 0.01, c = 3.7;
  const double w = std::log(2.0 / eps);
  auto r = golden_min_log([&](double a) { return a * w + c / a; }, 1e-6, 1e6, 1e-10);
  EXPECT_NEAR(r.x, std::sqrt(c / w), 1e-6 * std::sqrt(c / w));
}

TEST(Golden, NanIsAnError) {
  EXPECT_THROW(golden_min_1d([](double) { return std::nan(""); }, 0.0, 1.0), std::runtime_error);
}

TEST(InnerMax, LinearOnBoxIsImmediate) {
  auto box = BoxSet::cube(3, 0.0, 1.0);
  const Vec c{1.0, -2.0, 3.0};
  ConcaveOracle f = [&](const Vec& x) { return ConcaveEval{dot(c, x), c}; };
  auto rep = inner_max(f, *box);
  EXPECT_NEAR(rep.value, 4.0, 1e-12);
  EXPECT_LE(rep.iterations, 3);
  EXPECT_LE(rep.gap_estimate, 1e-9);
}

TEST(InnerMax, ConcaveQuadraticInteriorMax) {
  auto box = BoxSet::cube(2, -1.0, 1.0);
  const Vec p{0.3, -0.4};
  ConcaveOracle f = [&](const Vec& x) {
    Vec d = sub(x, p);
    Vec g = scaled(d, -2.0);
    return ConcaveEval{-dot(d, d), g};
  };
  SolverConfig cfg;
  cfg.inner_max_iter = 2000;
  cfg.inner_tol = 1e-10;
  auto rep = inner_max(f, *box, cfg);
  EXPECT_NEAR(rep.value, 0.0, 1e-6);
  EXPECT_NEAR(rep.arg[0], 0.3, 1e-3);
  EXPECT_NEAR(rep.arg[1], -0.4, 1e-3);
}

TEST(InnerMax, SingletonSingleOracleCall) {
  auto s = SingletonSet::make({2.0, 3.0});
  int calls = 0;
  ConcaveOracle f = [&](const Vec& x) {
    ++calls;
    return ConcaveEval{x[0] + x[1], {1.0, 1.0}};
  };
  auto rep = inner_max(f, *s);
  EXPECT_EQ(calls, 1);
  EXPECT_DOUBLE_EQ(rep.value, 5.0);
}

// Frank-Wolfe gap is a certified optimality bound: value + gap >= truth >= value
TEST(InnerMax, GapBracketsGridTruth) {
  auto box = BoxSet::cube(2, 0.0, 1.0);
  RngStream rng(4);
  for (int inst = 0; inst < 5; ++inst) {
    const Vec q{rng.next_uniform() + 0.5, rng.next_uniform() + 0.5};
    const Vec l{rng.next_gaussian(), rng.next_gaussian()};
    ConcaveOracle f = [&](const Vec& x) {
      // sqrt of affine plus linear, the closed-form risk shape
      const double s = 1.0 + q[0] * x[0] + q[1] * x[1];
      ConcaveEval e;
      e.value = std::sqrt(s) + dot(l, x);
      e.supergrad = {q[0] / (2.0 * std::sqrt(s)) + l[0], q[1] / (2.0 * std::sqrt(s)) + l[1]};
      return e;
    };
    SolverConfig cfg;
    cfg.inner_max_iter = 60;  // deliberately small so the gap matters
    cfg.inner_tol = 1e-12;
    auto rep = inner_max(f, *box, cfg);
    double truth = -1e300;
    const int g = 200;
    for (int i = 0; i <= g; ++i)
      for (int j = 0; j <= g; ++j)
        truth = std::max(truth, f({static_cast<double>(i) / g, static_cast<double>(j) / g}).value);
    EXPECT_GE(rep.value + rep.gap_estimate, truth - 1e-9);
    EXPECT_LE(rep.value, truth + 1e-9);
  }
}

TEST(OuterMin, StronglyConvexQuadratic) {
  const Vec target{1.0, -2.0, 0.5};
  ConvexOracle f = [&](const Vec& x) {
    Vec d = sub(x, target);
    return ConvexEval{dot(d, d), scaled(d, 2.0)};
  };
  SolverConfig cfg;
  cfg.max_iter = 2000;
  auto rep = outer_min(f, zeros(3), nullptr, cfg, 0.0);
  EXPECT_LE(rep.value, 1e-3);
}

TEST(OuterMin, KinkedAbsoluteValue) {
  ConvexOracle f = [](const Vec& x) {
    return ConvexEval{std::abs(x[0] - 0.7), {x[0] >= 0.7 ? 1.0 : -1.0}};
  };
  SolverConfig cfg;
  cfg.max_iter = 2000;
  auto rep = outer_min(f, {5.0}, nullptr, cfg, 0.0);
  EXPECT_LE(rep.value, 1e-3);
}

TEST(OuterMin, DeterministicGivenConfig) {
  ConvexOracle f = [](const Vec& x) {
    return ConvexEval{x[0] * x[0] + std::abs(x[1]), {2.0 * x[0], x[1] >= 0.0 ? 1.0 : -1.0}};
  };
  SolverConfig cfg;
  cfg.max_iter = 500;
  auto r1 = outer_min(f, {3.0, -2.0}, nullptr, cfg);
  auto r2 = outer_min(f, {3.0, -2.0}, nullptr, cfg);
  EXPECT_EQ(r1.value, r2.value);
  EXPECT_EQ(r1.arg, r2.arg);
  EXPECT_EQ(r1.iterations, r2.iterations);
}

TEST(OuterMin, ProjectedOntoBall) {
  auto ball = BallSet::origin(2, 1.0);
  const Vec target{3.0, 0.0};  // outside; constrained minimizer is (1,0)
  ConvexOracle f = [&](const Vec& x) {
    Vec d = sub(x, target);
    return ConvexEval{dot(d, d), scaled(d, 2.0)};
  };
  SolverConfig cfg;
  cfg.max_iter = 3000;
  auto rep = outer_min(
      f, zeros(2), [&](const Vec& p) { return ball->project(p); }, cfg, 4.0);
  EXPECT_NEAR(rep.arg[0], 1.0, 1e-2);
  EXPECT_NEAR(rep.value, 4.0, 1e-2);
}

// exact box maximizer of phi(m0 + <m,x>) + <lin,x> against a dense grid
TEST(BoxConcave, MatchesGridOracle) {
  RngStream rng(9);
  for (int inst = 0; inst < 10; ++inst) {
    const int n = 2;
    Vec lo{-1.0, 0.0}, hi{1.0, 2.0};
    Vec lin{rng.next_gaussian(), rng.next_gaussian()};
    Vec m{std::abs(rng.next_gaussian()), rng.next_gaussian()};
    double m0 = 3.0 + std::abs(rng.next_gaussian());
    // keep s positive over the box
    double smin = m0;
    for (int j = 0; j < n; ++j) smin += m[j] * (m[j] > 0 ? lo[j] : hi[j]);
    if (smin <= 0.1) m0 += 0.1 - smin;
    auto phi = [](double s) { return std::sqrt(s); };
    auto r = max_box_affine_plus_concave(lo, hi, lin, m, m0, phi);
    double truth = -1e300;
    const int g = 400;
    for (int i = 0; i <= g; ++i)
      for (int j = 0; j <= g; ++j) {
        const Vec x{lo[0] + (hi[0] - lo[0]) * i / g, lo[1] + (hi[1] - lo[1]) * j / g};
        truth = std::max(truth, phi(m0 + dot(m, x)) + dot(lin, x));
      }
    EXPECT_NEAR(r.value, truth, 1e-4 * (1.0 + std::abs(truth)));
    EXPECT_GE(r.value, truth - 1e-9);  // grid can only undershoot the exact solver
  }
}
