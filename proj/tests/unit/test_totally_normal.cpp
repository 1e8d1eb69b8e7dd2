#include <gtest/gtest.h>

#include "lipexp/lipexp.hpp"

using namespace lipexp;

TEST(TotallyNormal, BTensorIsIdentityAtBasePoint) {
  auto s = make_builtin<3>("sphere");
  const Vec<3> p(0.2, -0.1, 0.4);
  EXPECT_EQ(b_tensor<3>(*s, p, p), Mat<3>::Identity());
  auto f = make_builtin<2>("flat");
  EXPECT_EQ(b_tensor<2>(*f, Vec<2>::Zero(), Vec<2>(0.5, 0.5)), Mat<2>::Identity());
  EXPECT_DOUBLE_EQ(n_function<2>(Vec<2>(1, 1), Vec<2>(2, 3)), 5.0);
}

TEST(TotallyNormal, SpherePositivityRadius) {
  // stereographic chart at x = (r, 0): B = diag((1 + 3r²)/(1 + r²), (1 − r²)/(1 + r²))
  auto s = make_builtin<2>("sphere");
  const double r = 0.5;
  const Mat<2> B = b_tensor<2>(*s, Vec<2>::Zero(), Vec<2>(r, 0));
  EXPECT_NEAR(B(0, 0), (1 + 3 * r * r) / (1 + r * r), 1e-14);
  EXPECT_NEAR(B(1, 1), (1 - r * r) / (1 + r * r), 1e-14);
  EXPECT_NEAR(B(0, 1), 0.0, 1e-15);
  // λ_min(B) ≥ 0.1 needs r² ≤ 9/11
  const double dp = positivity_radius<2>(*s, Vec<2>::Zero());
  EXPECT_GT(dp, 0.5);
  EXPECT_LT(dp, 9.0 / 11.0);
}

TEST(TotallyNormal, FlatFindDelta) {
  auto f = make_builtin<2>("flat");
  const auto dom = find_delta<2>(f, Vec<2>::Zero(), CertificateConfig{});
  EXPECT_GT(dom.delta, 0.0);
  EXPECT_EQ(dom.delta_prime, 1.0);  // B ≡ I, so only the search range limits δ'
  EXPECT_LE(2 * std::sqrt(dom.delta), dom.inner_radius);
  EXPECT_EQ(dom.sweep.size(), 1u + 4u + 4u);
  EXPECT_NE(dom.w_descriptor().find("exp_q"), std::string::npos);
}

TEST(TotallyNormal, ShootingInvertsExp) {
  auto s = make_builtin<2>("sphere");
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Vec<2> q = rng.in_ball<2>(0.3), v = rng.in_ball<2>(0.2);
    const Vec<2> target = exp_map<2>(*s, q, v);
    EXPECT_LT((shoot<2>(*s, q, target) - v).norm(), 1e-8);
  }
  EXPECT_EQ(shoot<2>(*s, Vec<2>::Zero(), Vec<2>::Zero()), Vec<2>::Zero());
}

TEST(TotallyNormal, ShootingWithoutCurvature) {
  auto c = make_builtin<2>("c11_test");
  const Vec<2> q(0.1, 0.0), v(-0.15, 0.05);
  const Vec<2> target = exp_map<2>(*c, q, v);
  EXPECT_LT((shoot<2>(*c, q, target) - v).norm(), 1e-8);
}

TEST(TotallyNormal, SphereConvexityPasses) {
  auto s = make_builtin<2>("sphere");
  const auto dom = find_delta<2>(s, Vec<2>::Zero(), CertificateConfig{});
  ASSERT_GT(dom.delta, 0.0);
  const auto rep = verify_convexity<2>(*s, dom, 100, 3);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.inconclusive, 0u);
  EXPECT_LE(rep.stats.at("max_identity_error"), 1e-4);
}

TEST(TotallyNormal, IdentityHoldsOnLargerDomain) {
  // the second-difference identity is independent of how small δ is
  auto s = make_builtin<2>("sphere");
  ConvexityDomain<2> dom;
  dom.delta = 0.25;
  const auto rep = verify_convexity<2>(*s, dom, 100, 5);
  EXPECT_TRUE(rep.ok());
  EXPECT_LE(rep.stats.at("max_identity_error"), 1e-4);
}

TEST(TotallyNormal, BeyondHemisphereDetected) {
  auto s = make_builtin<2>("sphere");
  ConvexityDomain<2> dom;
  dom.delta = 2.25;
  const auto rep = verify_convexity<2>(*s, dom, 200, 5);
  EXPECT_GT(rep.violation_count, 0u);
}
