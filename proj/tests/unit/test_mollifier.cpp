#include <gtest/gtest.h>

#include "lipexp/lipexp.hpp"

using namespace lipexp;

TEST(Mollifier, KernelHasUnitIntegralAndZeroFirstMoment) {
  for (double eps : {0.08, 0.02, 0.005}) {
    const auto k2 = build_kernel<2>(eps, eps / 6, bump_profile<2>());
    EXPECT_NEAR(k2.integral(), 1.0, 1e-12);
    EXPECT_LT(k2.first_moment().norm(), 1e-15 * eps + 1e-18);
    const auto k3 = build_kernel<3>(eps, eps / 5, bump_profile<3>());
    EXPECT_NEAR(k3.integral(), 1.0, 1e-12);
  }
}

TEST(Mollifier, KernelNormalizationMatchesContinuousBump) {
  // 1D-equivalent check in 2D: fine grids approach the continuous normalisation.
  // ∫_{|y|<1} exp(−1/(1−|y|²)) dy in 2D = π ∫_0^1 e^{−1/(1−t)} dt; the 1D integral is the oracle below.
  const double one_d = 0.44399381616807944;  // ∫_{−1}^{1} exp(−1/(1−t²)) dt
  auto prof = bump_profile<2>();
  // Separable sanity: integrate the profile along the axis with a fine Riemann sum.
  double s = 0;
  const int n = 200000;
  for (int i = -n; i <= n; ++i) s += prof.value(Vec<2>(double(i) / n, 0.0)) / n;
  EXPECT_NEAR(s, one_d, 1e-10);
}

TEST(Mollifier, KernelSupportAndPositivity) {
  const auto k = build_kernel<2>(0.04, 0.04 / 6, bump_profile<2>());
  for (std::size_t j = 0; j < k.offsets.size(); ++j) {
    EXPECT_LT(k.node(j).norm(), k.epsilon);
    EXPECT_GE(k.w0[j], 0.0);
  }
  EXPECT_EQ(k.value(Vec<2>(0.05, 0.0)), 0.0);
}

TEST(Mollifier, UnderResolvedKernelRejected) {
  try {
    build_kernel<2>(0.01, 0.01 / 3, bump_profile<2>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnderResolved);
  }
}

TEST(Mollifier, ConstantMetricIsFixedPoint) {
  auto flat = make_builtin<2>("flat");
  const auto k = build_kernel<2>(0.05, 0.05 / 6, bump_profile<2>());
  const auto m = mollify<2>(flat, k, Box<2>::centered(Vec<2>::Zero(), 0.1));
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vec<2> x = rng.in_ball<2>(0.08);
    const auto jet = m->jet(x, 2);
    EXPECT_LT((jet.g - Mat<2>::Identity()).norm(), 1e-14);
    EXPECT_EQ(euclidean_norm<2>(christoffel(*m, x)), 0.0);
  }
}

TEST(Mollifier, QuadraticsDifferentiatedExactly) {
  // g11 = 2 + x² + 0.5xy: mollified second derivatives are exactly those of g
  // (the kernel's derivative weights are moment-matched).
  class Quad final : public MetricField<2> {
   public:
    Quad() : MetricField<2>("quad", {2, 0}, ChartDomain<2>::box(Vec<2>::Constant(-1), Vec<2>::Constant(1))) {}
    Regularity regularity() const override { return Regularity::SmoothAnalytic; }
    int max_order() const override { return 0; }

   protected:
    MetricJet<2> evaluate(const Vec<2>& x, int) const override {
      MetricJet<2> j;
      j.g(0, 0) = 2 + x[0] * x[0] + 0.5 * x[0] * x[1];
      return j;
    }
  };
  auto q = std::make_shared<Quad>();
  const auto k = build_kernel<2>(0.05, 0.05 / 6, bump_profile<2>());
  MollifiedMetric<2> m(q, std::make_shared<const MollifierKernel<2>>(k), nullptr);
  const Vec<2> x(0.1, -0.2);
  const auto jet = m.jet(x, 2);
  EXPECT_NEAR(jet.d2g[0][0](0, 0), 2.0, 1e-9);
  EXPECT_NEAR(jet.d2g[0][1](0, 0), 0.5, 1e-9);
  EXPECT_NEAR(jet.d2g[1][1](0, 0), 0.0, 1e-9);
  EXPECT_NEAR(jet.dg[0](0, 0), 2 * x[0] + 0.5 * x[1], 1e-9);
  EXPECT_NEAR(jet.dg[1](0, 0), 0.5 * x[0], 1e-9);
}

TEST(Mollifier, C11TestMetricSymmetryConsequences) {
  // g11 − 1 = x|x| is odd in x¹, so its mollification is odd: value 1 and
  // second derivative 0 at the origin, first derivative ∫ρ_ε·2|z¹| > 0.
  auto c = make_builtin<2>("c11_test");
  const auto k = build_kernel<2>(0.04, 0.04 / 6, bump_profile<2>());
  MollifiedMetric<2> m(c, std::make_shared<const MollifierKernel<2>>(k), nullptr);
  const auto jet = m.jet(Vec<2>::Zero(), 2);
  EXPECT_NEAR(jet.g(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(jet.d2g[0][0](0, 0), 0.0, 1e-9);
  EXPECT_GT(jet.dg[0](0, 0), 0.0);
  EXPECT_LT(jet.dg[0](0, 0), 2 * 0.04);
}

TEST(Mollifier, CacheMatchesDirectQuadrature) {
  auto s = make_builtin<2>("sphere");
  const auto k = build_kernel<2>(0.04, 0.04 / 6, bump_profile<2>());
  const auto m = mollify<2>(s, k, Box<2>::centered(Vec<2>(0.2, 0.1), 0.05));
  ASSERT_NE(m->cache(), nullptr);
  // on grid nodes the cache is the quadrature itself
  const auto& lay = m->cache()->layout();
  std::array<int, 2> idx{lay.shape[0] / 2, lay.shape[1] / 2 + 1};
  const Vec<2> x = lay.position(idx);
  EXPECT_LT((m->jet(x, 0).g - m->direct(x, 0).g).norm(), 1e-13);
  // between nodes interpolation error is small against the curvature scale
  const Vec<2> y = x + Vec<2>(0.3, 0.6) * lay.spacing[0];
  EXPECT_LT((m->jet(y, 1).dg[0] - m->direct(y, 1).dg[0]).norm(), 1e-5);
}

TEST(Mollifier, RegionLeavingChartRejected) {
  auto h = make_builtin<2>("hyperbolic");  // box ±3
  const auto k = build_kernel<2>(0.1, 0.1 / 6, bump_profile<2>());
  try {
    mollify<2>(h, k, Box<2>::centered(Vec<2>(2.9, 0), 0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
}

TEST(Mollifier, C11ConvergenceMonotoneWithUniformSecondDerivatives) {
  auto c = make_builtin<2>("c11_test");
  const Box<2> region = Box<2>::centered(Vec<2>::Zero(), 0.1);
  const auto fam = build_family<2>(c, region, 0.08, 6, 6.0);
  const auto rep = convergence_report<2>(fam, region, 9);
  ASSERT_EQ(rep.rows.size(), 6u);
  EXPECT_TRUE(rep.c1_monotone);
  EXPECT_FALSE(rep.d2_growth_violation);
  EXPECT_LE(rep.uniform_d2, 2.05);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    EXPECT_TRUE(rep.rows[i].signature_ok);
    // C¹ distance is O(ε): halving ε roughly halves it
    EXPECT_NEAR(rep.rows[i].sup_c1 / rep.rows[i - 1].sup_c1, 0.5, 0.05);
  }
  std::ostringstream csv;
  rep.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, 30), "epsilon,sup_c0,sup_c1,sup_d2\n0");
}

TEST(Mollifier, LorentzianSignaturePreserved) {
  auto l = make_builtin<3>("c11_lorentz");
  const auto fam = build_family<3>(l, Box<3>::centered(Vec<3>::Zero(), 0.05), 0.04, 2, 5.0);
  const auto rep = convergence_report<3>(fam, Box<3>::centered(Vec<3>::Zero(), 0.05), 4);
  for (const auto& r : rep.rows) EXPECT_TRUE(r.signature_ok);
  EXPECT_EQ(fam.members.back()->signature(), (Signature{1, 2}));
}
