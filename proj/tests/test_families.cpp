#include <gtest/gtest.h>

#include <cmath>

#include "minimax/families.hpp"
#include "minimax/rng.hpp"

using namespace minimax;

namespace {

// Exact Gaussian quadratic log-MGF ln E exp(h'z + z'Hz/2), z ~ N(theta, Theta),
// computed through Cholesky factors only -- independent of the eigen route the
// library uses.
double exact_gauss_log_mgf(const Vec& h, const SymMatrix& h_mat, const Vec& theta,
                           const SymMatrix& big_theta) {
  const int d = static_cast<int>(h.size());
  auto lopt = cholesky(big_theta);
  if (!lopt) throw std::runtime_error("oracle: Theta not PD");
  const Matrix& l = *lopt;
  // B = I - L' H L
  Matrix hl = h_mat.to_general().mul(l);
  Matrix lthl = l.transposed().mul(hl);
  SymMatrix b(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      b.set(i, j, (i == j ? 1.0 : 0.0) - 0.5 * (lthl(i, j) + lthl(j, i)));
  auto lb = cholesky(b);
  if (!lb) throw std::runtime_error("oracle: I - L'HL not PD");
  double lndet = 0.0;
  for (int i = 0; i < d; ++i) lndet += 2.0 * std::log((*lb)(i, i));
  Vec ht = h_mat.mul(theta);
  axpy(1.0, h, ht);                 // H theta + h
  const Vec z = l.tmul(ht);         // L'(H theta + h)
  const Vec y = cholesky_solve(*lb, z);
  return -0.5 * lndet + dot(h, theta) + 0.5 * dot(theta, h_mat.mul(theta)) + 0.5 * dot(z, y);
}

SymMatrix lift_of(const Vec& theta) {
  const int d = static_cast<int>(theta.size());
  SymMatrix z(d + 1);
  for (int i = 0; i <= d; ++i)
    for (int j = i; j <= d; ++j) {
      const double a = i < d ? theta[static_cast<std::size_t>(i)] : 1.0;
      const double b = j < d ? theta[static_cast<std::size_t>(j)] : 1.0;
      z.set(i, j, a * b);
    }
  return z;
}

SymMatrix random_sym(RngStream& rng, int d, double s) {
  SymMatrix m(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m.set(i, j, s * rng.next_gaussian());
  return m;
}

}  // namespace

TEST(SubGaussian, SpecValues) {
  EXPECT_DOUBLE_EQ(subgaussian_phi(zeros(2), {1.0, 2.0}, SymMatrix::identity(2)), 0.0);
  EXPECT_DOUBLE_EQ(subgaussian_phi({1.0, 0.0}, zeros(2), SymMatrix::identity(2)), 0.5);
  EXPECT_DOUBLE_EQ(subgaussian_phi({1.0, 1.0}, {1.0, 2.0}, SymMatrix::diag({1.0, 4.0})), 5.5);
}

TEST(SubGaussian, GradientMatchesFiniteDifferences) {
  RngStream rng(1);
  const int d = 3;
  for (int t = 0; t < 20; ++t) {
    const Vec theta = rng.gaussian_vec(d);
    SymMatrix m = random_sym(rng, d, 0.5);
    m.add_scaled(SymMatrix::identity(d), 2.0);  // PSD-ish
    const Vec h = rng.gaussian_vec(d);
    const Vec g = subgaussian_grad(h, theta, m);
    const Vec dir = rng.gaussian_vec(d);
    const double step = 1e-5;
    Vec hp = h, hm = h;
    axpy(step, dir, hp);
    axpy(-step, dir, hm);
    const double fd =
        (subgaussian_phi(hp, theta, m) - subgaussian_phi(hm, theta, m)) / (2.0 * step);
    EXPECT_NEAR(dot(g, dir), fd, 1e-5 * (1.0 + std::abs(fd)));
  }
}

TEST(GaussLift, ZeroIsZero) {
  GaussLiftFamily fam(SymMatrix::identity(2), 0.5);
  SymMatrix theta = SymMatrix::identity(2);
  EXPECT_NEAR(fam.phi(zeros(2), SymMatrix(2), theta, lift_of({0.3, -0.7})), 0.0, 1e-14);
}

TEST(GaussLift, ScalarLogDetCase) {
  // d=1, Theta*=1, delta=0, H=0.5, h=0, Z=diag(0,1): -0.5 ln(0.5)  [frozen oracle value]
  GaussLiftFamily fam(SymMatrix::identity(1), 0.0);
  SymMatrix h_mat(1);
  h_mat.set(0, 0, 0.5);
  SymMatrix z(2);
  z.set(1, 1, 1.0);
  EXPECT_NEAR(fam.phi(zeros(1), h_mat, SymMatrix::identity(1), z), 0.34657359027997264, 1e-12);
}

TEST(GaussLift, ScalarLinearCase) {
  // d=1, H=0, h=1, Z=diag(0,1): Gamma = h^2/2 = 0.5
  GaussLiftFamily fam(SymMatrix::identity(1), 0.0);
  SymMatrix z(2);
  z.set(1, 1, 1.0);
  EXPECT_NEAR(fam.phi({1.0}, SymMatrix(1), SymMatrix::identity(1), z), 0.5, 1e-14);
}

TEST(GaussLift, DomainErrors) {
  GaussLiftFamily fam(SymMatrix::identity(2), 0.0);
  SymMatrix h_mat = SymMatrix::identity(2);  // spectral norm 1: out of domain
  SymMatrix z(3);
  z.set(2, 2, 1.0);
  EXPECT_THROW(fam.phi(zeros(2), h_mat, SymMatrix::identity(2), z), std::domain_error);
  SymMatrix bad_z(3);
  bad_z.set(2, 2, 0.5);  // corner not 1
  EXPECT_THROW(fam.phi(zeros(2), SymMatrix(2), SymMatrix::identity(2), bad_z),
               std::domain_error);
  EXPECT_THROW(GaussLiftFamily(SymMatrix(2), 0.0), std::invalid_argument);  // Theta* not PD
  EXPECT_THROW(GaussLiftFamily(SymMatrix::identity(2), 3.0), std::invalid_argument);
}

// delta=0, Theta=Theta*: Phi reproduces the exact Gaussian quadratic log-MGF
TEST(GaussLift, TightAtThetaStar) {
  RngStream rng(7);
  for (int d = 1; d <= 3; ++d) {
    // random PD Theta*
    SymMatrix ts = random_sym(rng, d, 0.3);
    ts = psd_clip(ts);
    ts.add_scaled(SymMatrix::identity(d), 1.0);
    GaussLiftFamily fam(ts, 0.0);
    for (int t = 0; t < 30; ++t) {
      SymMatrix h_mat = random_sym(rng, d, 0.4);
      if (fam.spec_norm_h_tilde(h_mat) > 0.95) continue;
      const Vec h = rng.gaussian_vec(d);
      const Vec theta = rng.gaussian_vec(d);
      const double phi = fam.phi(h, h_mat, ts, lift_of(theta));
      const double exact = exact_gauss_log_mgf(h, h_mat, theta, ts);
      EXPECT_NEAR(phi, exact, 1e-10 * (1.0 + std::abs(exact)));
    }
  }
}

TEST(GaussLift, GradientMatchesFiniteDifferences) {
  RngStream rng(21);
  const int d = 3;
  SymMatrix ts = random_sym(rng, d, 0.2);
  ts = psd_clip(ts);
  ts.add_scaled(SymMatrix::identity(d), 1.5);
  for (double delta : {0.0, 0.7}) {
    GaussLiftFamily fam(ts, delta);
    int done = 0;
    for (int t = 0; t < 100 && done < 20; ++t) {
      SymMatrix h_mat = random_sym(rng, d, 0.25);
      if (fam.spec_norm_h_tilde(h_mat) > 0.8) continue;
      const Vec h = rng.gaussian_vec(d);
      SymMatrix theta = random_sym(rng, d, 0.2);
      theta = psd_clip(theta);
      const Vec center = rng.gaussian_vec(d);
      const SymMatrix z = lift_of(center);
      const auto g = fam.grad(h, h_mat, theta, z);
      // random symmetric direction
      const Vec dh = rng.gaussian_vec(d);
      const SymMatrix dm = random_sym(rng, d, 1.0);
      const double step = 1e-5;
      SymMatrix hp = h_mat, hm = h_mat;
      hp.add_scaled(dm, step);
      hm.add_scaled(dm, -step);
      Vec hhp = h, hhm = h;
      axpy(step, dh, hhp);
      axpy(-step, dh, hhm);
      const double fd =
          (fam.phi(hhp, hp, theta, z) - fam.phi(hhm, hm, theta, z)) / (2.0 * step);
      const double an = dot(g.h, dh) + g.h_mat.inner(dm);
      EXPECT_NEAR(an, fd, 1e-5 * (1.0 + std::abs(fd)));
      ++done;
    }
    EXPECT_EQ(done, 20);
  }
}

TEST(GaussLift, GradientAtZeroIsOffCornerColumn) {
  RngStream rng(33);
  const int d = 2;
  GaussLiftFamily fam(SymMatrix::identity(d), 0.0);
  const Vec center{0.4, -1.2};
  const SymMatrix z = lift_of(center);
  const auto g = fam.grad(zeros(d), SymMatrix(d), SymMatrix::identity(d), z);
  for (int i = 0; i < d; ++i) EXPECT_NEAR(g.h[i], z(i, d), 1e-12);
}

TEST(GaussLift, AlphaParametrizedPiecesMatchDirectEvaluation) {
  RngStream rng(55);
  const int d = 3;
  SymMatrix ts = random_sym(rng, d, 0.2);
  ts = psd_clip(ts);
  ts.add_scaled(SymMatrix::identity(d), 1.2);
  GaussLiftFamily fam(ts, 0.6);
  for (int t = 0; t < 10; ++t) {
    SymMatrix h_mat = random_sym(rng, d, 0.5);
    const Vec h = rng.gaussian_vec(d);
    const auto prep = fam.prepare(h, h_mat);
    const SymMatrix z = lift_of(rng.gaussian_vec(d));
    const auto ga = fam.gamma_alpha(prep, z);
    SymMatrix theta = psd_clip(random_sym(rng, d, 0.3));
    for (double alpha :
         {1.05 * prep.spec_norm + 0.2, prep.spec_norm + 1.0, prep.spec_norm + 5.0}) {
      // direct: alpha * phi(h/alpha, H/alpha; theta, z)
      Vec hs = scaled(h, 1.0 / alpha);
      SymMatrix hms = h_mat;
      hms *= 1.0 / alpha;
      const double direct = alpha * fam.phi(hs, hms, theta, z);
      const double pieces = fam.upsilon_alpha(prep, alpha) +
                            0.5 * theta.inner(h_mat) - 0.5 * ts.inner(h_mat) +
                            fam.gamma_alpha_value(prep, ga, alpha);
      EXPECT_NEAR(pieces, direct, 1e-9 * (1.0 + std::abs(direct)));
    }
  }
}

TEST(GaussLift, CoerciveAlongRay) {
  GaussLiftFamily fam(SymMatrix::identity(2), 0.0);
  const SymMatrix z = lift_of({1.0, 1.0});
  double prev = -1e300;
  for (double t : {10.0, 100.0, 1000.0}) {
    const double v = fam.phi({t, 0.0}, SymMatrix(2), SymMatrix::identity(2), z);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(DiscreteLift, SpecValues) {
  DiscreteLiftFamily fam(2, 1);
  SymMatrix z(2);
  z.set(0, 0, 0.5);
  z.set(0, 1, 0.25);
  EXPECT_NEAR(fam.phi(SymMatrix(2), z), 0.0, 1e-14);
  SymMatrix ones(2);
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) ones.set(i, j, 3.7);
  DiscreteLiftFamily fam5(2, 2);  // K=4 or 5
  EXPECT_NEAR(fam5.phi(ones, z), 3.7, 1e-12);
  SymMatrix h(2);
  h.set(0, 0, std::log(2.0));
  EXPECT_NEAR(fam.phi(h, z), 0.4054651081081644, 1e-12);  // ln 1.5, frozen oracle value
}

TEST(DiscreteLift, DomainErrors) {
  DiscreteLiftFamily fam(2, 1);
  SymMatrix z(2);
  z.set(0, 0, 0.7);
  z.set(1, 1, 0.7);  // sums to 1.4
  EXPECT_THROW(fam.phi(SymMatrix(2), z), std::domain_error);
  SymMatrix zn(2);
  zn.set(0, 0, 1.2);
  zn.set(0, 1, -0.1);
  EXPECT_THROW(fam.phi(SymMatrix(2), zn), std::domain_error);
  EXPECT_THROW(DiscreteLiftFamily::for_sample_size(2, 1), std::invalid_argument);
}

TEST(DiscreteLift, OverflowSafeAtExtremeEntries) {
  DiscreteLiftFamily fam(2, 1);
  SymMatrix z(2);
  z.set(0, 0, 0.5);
  z.set(0, 1, 0.25);
  SymMatrix h(2);
  h.set(0, 0, 1000.0);
  h.set(1, 1, -1000.0);
  const double v = fam.phi(h, z);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 1000.0 + std::log(0.5), 1e-9);
}

TEST(DiscreteLift, GradientMatchesFiniteDifferences) {
  RngStream rng(3);
  const int d = 3;
  DiscreteLiftFamily fam(d, 2);
  for (int t = 0; t < 20; ++t) {
    // random matrix-simplex Z
    SymMatrix z(d);
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const double v = rng.next_uniform();
        z.set(i, j, v);
        s += (i == j) ? v : 2.0 * v;
      }
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) z.set(i, j, z(i, j) / s);
    const SymMatrix h = random_sym(rng, d, 1.0);
    const SymMatrix g = fam.grad_h(h, z);
    const SymMatrix dir = random_sym(rng, d, 1.0);
    const double step = 1e-5;
    SymMatrix hp = h, hm = h;
    hp.add_scaled(dir, step);
    hm.add_scaled(dir, -step);
    const double fd = (fam.phi(hp, z) - fam.phi(hm, z)) / (2.0 * step);
    EXPECT_NEAR(g.inner(dir), fd, 1e-5 * (1.0 + std::abs(fd)));
  }
}

TEST(DiscreteLift, PermutationInvariance) {
  RngStream rng(8);
  const int d = 3;
  DiscreteLiftFamily fam(d, 2);
  SymMatrix z(d);
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = rng.next_uniform();
      z.set(i, j, v);
      s += (i == j) ? v : 2.0 * v;
    }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) z.set(i, j, z(i, j) / s);
  const SymMatrix h = random_sym(rng, d, 1.0);
  // permutation (0 1 2) -> (2 0 1)
  const int p[3] = {2, 0, 1};
  SymMatrix hp(d), zp(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      hp.set(p[i], p[j], h(i, j));
      zp.set(p[i], p[j], z(i, j));
    }
  EXPECT_NEAR(fam.phi(h, z), fam.phi(hp, zp), 1e-13);
}

// midpoint convexity in the convex argument, concavity in the concave one
TEST(Families, ConvexConcaveProbe) {
  RngStream rng(99);
  const int d = 2;
  GaussLiftFamily fam(SymMatrix::identity(d), 0.4);
  int tried = 0;
  for (int t = 0; t < 400 && tried < 100; ++t) {
    SymMatrix ha = random_sym(rng, d, 0.3), hb = random_sym(rng, d, 0.3);
    if (fam.spec_norm_h_tilde(ha) > 0.9 || fam.spec_norm_h_tilde(hb) > 0.9) continue;
    const Vec va = rng.gaussian_vec(d), vb = rng.gaussian_vec(d);
    SymMatrix theta = psd_clip(random_sym(rng, d, 0.3));
    const SymMatrix z = lift_of(rng.gaussian_vec(d));
    SymMatrix hmid = ha;
    hmid.add_scaled(hb, 1.0);
    hmid *= 0.5;
    Vec vmid = add(va, vb);
    scale(vmid, 0.5);
    const double lhs = fam.phi(vmid, hmid, theta, z);
    const double rhs =
        0.5 * fam.phi(va, ha, theta, z) + 0.5 * fam.phi(vb, hb, theta, z);
    EXPECT_LE(lhs, rhs + 1e-9);
    ++tried;
  }
  EXPECT_EQ(tried, 100);
  // concave (affine) in Theta and Z: midpoint equality within tolerance
  DiscreteLiftFamily dfam(d, 1);
  for (int t = 0; t < 100; ++t) {
    auto rand_simplex = [&] {
      SymMatrix z(d);
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          const double v = rng.next_uniform();
          z.set(i, j, v);
          s += (i == j) ? v : 2.0 * v;
        }
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) z.set(i, j, z(i, j) / s);
      return z;
    };
    const SymMatrix za = rand_simplex(), zb = rand_simplex();
    const SymMatrix h = random_sym(rng, d, 1.0);
    SymMatrix zmid = za;
    zmid.add_scaled(zb, 1.0);
    zmid *= 0.5;
    EXPECT_GE(dfam.phi(h, zmid), 0.5 * dfam.phi(h, za) + 0.5 * dfam.phi(h, zb) - 1e-9);
  }
}

TEST(Mgf, GaussLiftTightCaseDominatesWithinError) {
  // delta=0, Theta=Theta*: the bound is the exact log-MGF, so empirical ~ Phi
  GaussLiftFamily fam(SymMatrix::identity(1), 0.0);
  SymMatrix h_mat(1);
  h_mat.set(0, 0, 0.3);
  auto rep = mgf_dominates_gauss_lift(fam, {0.2}, h_mat, {0.5}, SymMatrix::identity(1),
                                      200000, 42);
  EXPECT_TRUE(rep.dominated);
  EXPECT_NEAR(rep.empirical_log_mgf, rep.phi_bound, 5.0 * rep.stderr_ + 1e-3);
}

TEST(Mgf, DiscreteLiftDominates) {
  const int d = 2;
  DiscreteLiftFamily fam = DiscreteLiftFamily::for_sample_size(d, 4);
  RngStream rng(5);
  for (int t = 0; t < 3; ++t) {
    SymMatrix h(d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) h.set(i, j, rng.next_gaussian());
    auto rep = mgf_dominates_discrete_lift(fam, h, {0.5, 0.5}, 4, 50000, 7 + t);
    EXPECT_TRUE(rep.dominated);
  }
}

TEST(Mgf, ZeroCaseExact) {
  GaussLiftFamily fam(SymMatrix::identity(1), 0.0);
  auto rep =
      mgf_dominates_gauss_lift(fam, zeros(1), SymMatrix(1), zeros(1), SymMatrix::identity(1),
                               1000, 1);
  EXPECT_NEAR(rep.empirical_log_mgf, 0.0, 1e-12);
  EXPECT_NEAR(rep.phi_bound, 0.0, 1e-12);
}

TEST(Helpers, DiagBoxFamilyParameters) {
  // [theta s^2, s^2] box: Theta* = s^2 I, delta = 1 - sqrt(theta)
  const double s2 = 4.0, th = 0.25;
  auto fam = GaussLiftFamily::from_diag_box(Vec(3, th * s2), Vec(3, s2));
  EXPECT_NEAR(fam.delta(), 1.0 - std::sqrt(th), 1e-12);
  EXPECT_NEAR(fam.theta_star()(0, 0), s2, 1e-12);
  EXPECT_NEAR(fam.theta_star()(0, 1), 0.0, 1e-12);
}

TEST(Helpers, PairwiseLiftFromCounts) {
  // K=2, samples (1,2) -> [[0, .5], [.5, 0]]
  SymMatrix w = pairwise_lift_from_counts({1, 1}, 2);
  EXPECT_DOUBLE_EQ(w(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(w(0, 1), 0.5);
  // all equal to category 0 -> e0 e0'
  SymMatrix w2 = pairwise_lift_from_counts({3, 0}, 3);
  EXPECT_DOUBLE_EQ(w2(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(w2(0, 1), 0.0);
  // K=3 samples (1,1,2): [[1/3, 1/3], [1/3, 0]]
  SymMatrix w3 = pairwise_lift_from_counts({2, 1}, 3);
  EXPECT_NEAR(w3(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w3(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w3(1, 1), 0.0, 1e-15);
  // entries always sum to 1
  EXPECT_NEAR(w3.entry_sum(), 1.0, 1e-12);
}
