#include <gtest/gtest.h>

#include "lipexp/lipexp.hpp"

using namespace lipexp;

TEST(Comparison, PhiOracles) {
  ComparisonInputs in;
  in.mu = 0.1;
  in.k = 1.0;
  in.alpha = 0.0;
  EXPECT_NEAR(phi(in, 1.0), 0.27182818284590452, 1e-16);
  in.alpha = 0.01;
  EXPECT_NEAR(phi(in, 1.0), 0.28901100113049498, 1e-16);
  EXPECT_DOUBLE_EQ(phi(in, 0.0), 0.1);
}

TEST(Comparison, PhiLimitAndErrors) {
  ComparisonInputs in;
  in.mu = 0.1;
  in.alpha = 0.02;
  in.k = 0.0;
  bool limit = false;
  EXPECT_DOUBLE_EQ(phi(in, 2.0, &limit), 0.14);
  EXPECT_TRUE(limit);
  in.k = 1e-300;  // continuity into the limit
  EXPECT_NEAR(phi(in, 2.0, &limit), 0.14, 1e-15);
  EXPECT_FALSE(limit);
  in.k = -1.0;
  try {
    phi(in, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonpositiveK);
  }
}

TEST(Comparison, PhiMonotoneInEveryArgument) {
  Rng rng(42);
  for (int t = 0; t < 1000; ++t) {
    ComparisonInputs in;
    in.mu = rng.uniform(0, 1);
    in.alpha = rng.uniform(0, 1);
    in.k = rng.uniform(0.01, 5);
    const double xi = rng.uniform(0, 2), d = rng.uniform(1e-6, 0.5);
    const double base = phi(in, xi);
    EXPECT_GE(phi(in, xi + d), base);
    auto m = in;
    m.mu += d;
    EXPECT_GE(phi(m, xi), base);
    m = in;
    m.alpha += d;
    EXPECT_GE(phi(m, xi), base);
    m = in;
    m.k += d;
    EXPECT_GE(phi(m, xi), base);
  }
}

TEST(Comparison, MuBoundOracleAndFixedPoint) {
  EXPECT_NEAR(mu_bound(1.0, 1.1, 1.0, 0.01), 0.32619979453506035, 1e-15);
  ComparisonInputs in;
  in.k = 1.0;
  in.alpha = 0.01;
  in.mu = mu_bound(1.0, 1.1, 1.0, 0.01);
  EXPECT_NEAR(phi(in, 1.1), 1.0, 1e-14);  // φ(b) = δ at the bound
}

TEST(Radii, ClosedFormOracles) {
  EXPECT_NEAR(radius_r1(2.0, 10.0, 0.99), 0.2475, 1e-16);
  EXPECT_NEAR(radius_r1(0.0, 0.1, 0.95), 0.0475, 1e-16);  // K2 = 0 limit: shrink·μ/2
  EXPECT_NEAR(r2_log_term(2.0, 4.0), 0.091160778396977313, 1e-16);
  EXPECT_NEAR(r2_log_term(2.0, 0.0), 0.34657359027997265, 1e-16);
  EXPECT_TRUE(std::isinf(r2_log_term(0.0, 0.0)));
  EXPECT_NEAR(radius_r2(0.0, 0.0, 0.04, 0.95), 0.038, 1e-16);
  // r3 root at K1 = K2 = 1, r2 = 0.09116: L(root) = 1/8
  const auto r3 = radius_r3_and_c(1.0, 1.0, 0.09116, 1.0);
  EXPECT_NEAR(r3.r3, 0.0014134176208267683, 1e-15);
  EXPECT_NEAR(r3.lower, 0.125, 1e-12);
}

TEST(Radii, EnvelopeOracle) {
  const auto e = jacobi_envelope(2.0, 4.0, std::log(1.2) / 2);
  EXPECT_NEAR(e.upper, 1.6, 1e-14);
  EXPECT_NEAR(e.lower, 0.5, 1e-14);
  const auto z = jacobi_envelope(0.0, 4.0, 0.1);
  EXPECT_NEAR(z.lower, 0.6, 1e-15);
  EXPECT_NEAR(z.upper, 1.4, 1e-15);
}

TEST(Radii, EnvelopeWithinHalfAndTwoOnR2) {
  Rng rng(9);
  for (int t = 0; t < 2000; ++t) {
    const double K1 = rng.uniform(0, 10), K2 = rng.uniform(0, 10), mu = rng.uniform(1e-3, 1);
    const double r1 = radius_r1(K2, mu), r2 = radius_r2(K1, K2, r1);
    for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto e = jacobi_envelope(2 * K2, 4 * K1, f * r2);
      EXPECT_GE(e.lower, 0.5);
      EXPECT_LE(e.upper, 2.0);
    }
  }
}

TEST(Radii, MonotoneDegradation) {
  // increasing K1 or K2 never increases a radius
  Rng rng(10);
  auto chain = [](double K1, double K2, double mu) {
    const double r1 = radius_r1(K2, mu), r2 = radius_r2(K1, K2, r1);
    const auto r3 = radius_r3_and_c(K1, K2, r2);
    const auto ch = radius_chain(r3.c2, r3.r3);
    return std::array<double, 5>{r1, r2, r3.r3, ch.r4, ch.r7};
  };
  for (int t = 0; t < 1000; ++t) {
    const double K1 = rng.uniform(0, 10), K2 = rng.uniform(0, 10), mu = rng.uniform(1e-3, 1);
    const double d = rng.uniform(1e-3, 1);
    const auto base = chain(K1, K2, mu), a = chain(K1 + d, K2, mu), b = chain(K1, K2 + d, mu);
    for (int i = 0; i < 5; ++i) {
      EXPECT_LE(a[i], base[i] * (1 + 1e-12));
      EXPECT_LE(b[i], base[i] * (1 + 1e-12));
    }
  }
}

TEST(Radii, ChainOrdering) {
  Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    const double K1 = rng.uniform(0, 10), K2 = rng.uniform(0, 10), mu = rng.uniform(1e-3, 1);
    const double r1 = radius_r1(K2, mu), r2 = radius_r2(K1, K2, r1);
    const auto r3 = radius_r3_and_c(K1, K2, r2);
    const auto ch = radius_chain(r3.c2, r3.r3);
    EXPECT_LE(r3.r3, r2);
    EXPECT_LE(r2, r1);
    EXPECT_LE(r1, mu / 2);
    EXPECT_LT(ch.r4, r3.r3);
    EXPECT_LT(ch.r5, ch.r4);
    EXPECT_LT(ch.r_hat, ch.r5);
    EXPECT_LT(ch.r6, ch.r_hat);
    EXPECT_LT(ch.r7, ch.r6);
    EXPECT_GT(r3.c2, 0.0);
    const auto [c3, c4] = bilipschitz_constants(r3.c2, 1.5);
    EXPECT_LE(c4, 1.0);
    EXPECT_GE(c3, 1.0);
  }
}

TEST(Radii, BilipschitzConstantsLimit) {
  const auto [c3, c4] = bilipschitz_constants(1e-12, 1.0);
  EXPECT_NEAR(c3, 1.0, 1e-11);
  EXPECT_NEAR(c4, 1.0, 1e-11);
}

TEST(Certificate, ConfigValidation) {
  CertificateConfig c;
  c.b = 0.5;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
  c = {};
  c.shrink = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.mv_slack = 0.9;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Certificate, FlatLimitMode) {
  auto f = make_builtin<2>("flat");
  const auto run = full_certificate<2>(f, Vec<2>::Zero());
  const auto& c = run.cert;
  EXPECT_EQ(c.K1, 0.0);
  EXPECT_EQ(c.K2, 0.0);
  EXPECT_EQ(c.alpha, 0.0);
  EXPECT_EQ(c.k, 1.0);
  EXPECT_NEAR(c.mu, 0.079056882378293894, 1e-15);
  EXPECT_NEAR(c.r1, 0.037552019129689600, 1e-15);
  EXPECT_NEAR(c.r2, 0.035674418173205120, 1e-15);
  EXPECT_NEAR(c.r3, 0.033890697264544864, 1e-15);
  EXPECT_NEAR(c.c2, 3.4657359027997265, 1e-14);
  EXPECT_NEAR(c.c3, 32.0, 1e-12);
  EXPECT_NEAR(c.c4, 1.0 / 48, 1e-15);
  EXPECT_NEAR(c.r7, 8.4241286434416793e-07, 1e-20);
  EXPECT_TRUE(c.invariant_violations().empty());
  bool limit_note = false;
  for (const auto& n : c.notes) limit_note = limit_note || n.find("limit mode") != std::string::npos;
  EXPECT_TRUE(limit_note);
  EXPECT_EQ(c.formulas.count("r7"), 1u);
}

TEST(Certificate, SphereCurvatureBoundDominatesTrueCurvature) {
  auto s = make_builtin<2>("sphere");
  const auto run = full_certificate<2>(s, Vec<2>::Zero());
  const auto& c = run.cert;
  // ‖R‖_E at the origin of the chart, from the analytic curvature
  const double R0 = euclidean_norm<2>(riemann_curvature<2>(*s, Vec<2>::Zero().eval()));
  EXPECT_GE(c.K1, R0);
  EXPECT_LT(c.K1, 1.5 * R0);
  EXPECT_GT(c.r7, 0.0);
  EXPECT_TRUE(c.invariant_violations().empty());
  EXPECT_LE(c.epsilon0, 0.08);
  EXPECT_FALSE(run.covered().empty());
}

TEST(Certificate, FlatMuLinearInDelta) {
  // k floor and α = 0: μ = shrink·δ·e^{−b}
  auto f = make_builtin<2>("flat");
  CertificateConfig a, b;
  b.delta = 0.2;
  const double ma = full_certificate<2>(f, Vec<2>::Zero(), a).cert.mu;
  const double mb = full_certificate<2>(f, Vec<2>::Zero(), b).cert.mu;
  EXPECT_NEAR(mb / ma, 0.8, 1e-14);
  EXPECT_NEAR(ma, 0.95 * 0.25 * std::exp(-1.1), 1e-15);
}

TEST(Certificate, LorentzianC11) {
  auto l = make_builtin<2>("c11_lorentz");
  const auto run = full_certificate<2>(l, Vec<2>::Zero());
  EXPECT_GT(run.cert.r7, 0.0);
  EXPECT_TRUE(run.cert.invariant_violations().empty());
}

TEST(Certificate, PointOutsideChart) {
  auto h = make_builtin<2>("hyperbolic");
  try {
    full_certificate<2>(h, Vec<2>(5, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
}

TEST(Certificate, NoFeasibleMuNearChartEdge) {
  // working ball B(p, 2δ) does not fit: common domain cannot be formed
  auto h = make_builtin<2>("hyperbolic");
  EXPECT_THROW(full_certificate<2>(h, Vec<2>(2.7, 0)), Error);
}
