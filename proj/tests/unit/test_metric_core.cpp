#include <gtest/gtest.h>

#include <numbers>

#include "lipexp/lipexp.hpp"

using namespace lipexp;

namespace {

// Finite-difference Christoffel symbols from g alone (independent of jets).
template <int N>
Christoffel<N> fd_christoffel(const MetricField<N>& m, const Vec<N>& x, double h = 1e-5) {
  std::array<Mat<N>, N> dg;
  for (int k = 0; k < N; ++k) {
    const Vec<N> e = h * Vec<N>::Unit(k);
    dg[k] = (m.g(x + e) - m.g(x - e)) / (2 * h);
  }
  const Mat<N> gi = m.g(x).inverse();
  Christoffel<N> G;
  for (int k = 0; k < N; ++k) {
    G[k].setZero();
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) G[k](i, j) += 0.5 * gi(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  }
  return G;
}

}  // namespace

TEST(MetricCore, FlatChristoffelAndCurvatureVanish) {
  auto g = make_builtin<3>("flat");
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Vec<3> x = rng.in_ball<3>(1.0);
    EXPECT_EQ(euclidean_norm<3>(christoffel(*g, x)), 0.0);
    EXPECT_EQ(euclidean_norm<3>(riemann_curvature(*g, x)), 0.0);
  }
}

TEST(MetricCore, PolarSphereChristoffelOracle) {
  SpherePolarMetric m;
  const Vec<2> x(std::numbers::pi / 4, 0.3);
  const auto G = christoffel(m, x);
  EXPECT_NEAR(G[0](1, 1), -0.5, 1e-14);  // Γ^θ_φφ = −sin θ cos θ
  EXPECT_NEAR(G[1](0, 1), 1.0, 1e-14);   // Γ^φ_θφ = cot θ
  EXPECT_NEAR(G[1](1, 0), 1.0, 1e-14);
  EXPECT_NEAR(G[0](0, 0), 0.0, 1e-15);
}

TEST(MetricCore, C11ChristoffelOracle) {
  C11TestMetric<2> m;
  const auto G = christoffel(m, Vec<2>(0.3, -0.2));
  EXPECT_NEAR(G[0](0, 0), 0.2752293577981651376, 1e-15);  // x/(1 + x|x|) at 0.3
  EXPECT_NEAR(G[1](1, 1), 0.0, 1e-15);
  const auto Gn = christoffel(m, Vec<2>(-0.3, 0.0));
  EXPECT_NEAR(Gn[0](0, 0), 0.3 / 0.91, 1e-15);  // ∂₁g₁₁ = 2|x| is even
}

TEST(MetricCore, ChristoffelMatchesFiniteDifferences) {
  auto s = make_builtin<3>("sphere");
  auto sw = make_builtin<3>("schwarzschild");
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const Vec<3> x = rng.in_ball<3>(0.8);
    const auto G = christoffel(*s, x), F = fd_christoffel(*s, x);
    for (int k = 0; k < 3; ++k) EXPECT_LT((G[k] - F[k]).norm(), 1e-8);
    const Vec<3> y = Vec<3>(3, 0, 0) + x;
    const auto G2 = christoffel(*sw, y), F2 = fd_christoffel(*sw, y);
    for (int k = 0; k < 3; ++k) EXPECT_LT((G2[k] - F2[k]).norm(), 1e-8);
  }
}

TEST(MetricCore, ConstantCurvatureSectional) {
  auto s = make_builtin<3>("sphere");
  HyperbolicMetric h;
  SpherePolarMetric sp;
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Vec<3> x = rng.in_ball<3>(2.0);
    const Vec<3> u = rng.unit_vector<3>(), v = rng.unit_vector<3>();
    EXPECT_NEAR(sectional_curvature(*s, x, u, v), 1.0, 1e-10);
    const Vec<2> y = rng.in_ball<2>(1.0);
    EXPECT_NEAR(sectional_curvature<2>(h, y, Vec<2>(1, 0), Vec<2>(0.3, 1)), -1.0, 1e-10);
    EXPECT_NEAR(sectional_curvature<2>(sp, Vec<2>(1.0 + 0.5 * y[0], y[1]), Vec<2>(1, 0.2), Vec<2>(0, 1)), 1.0, 1e-10);
  }
}

TEST(MetricCore, RiemannSymmetries) {
  auto sw = make_builtin<3>("schwarzschild");
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const Vec<3> x = Vec<3>(3, 0, 0) + rng.in_ball<3>(1.0);
    const auto jet = sw->jet(x, 2);
    const auto R = riemann(connection(jet));
    const Vec<3> a = rng.unit_vector<3>(), b = rng.unit_vector<3>(), c = rng.unit_vector<3>(), d = rng.unit_vector<3>();
    // R(u,v) = −R(v,u)
    EXPECT_LT((R.apply(a, b, c) + R.apply(b, a, c)).norm(), 1e-12);
    // first Bianchi identity
    EXPECT_LT((R.apply(a, b, c) + R.apply(b, c, a) + R.apply(c, a, b)).norm(), 1e-12);
    // ⟨R(u,v)w, z⟩ = −⟨R(u,v)z, w⟩ (metric compatibility)
    const Mat<3>& g = jet.g;
    EXPECT_NEAR(d.dot(g * R.apply(a, b, c)), -c.dot(g * R.apply(a, b, d)), 1e-12);
  }
}

TEST(MetricCore, NormConventionsAreFlattenedSpectralNorms) {
  Christoffel<2> G;
  G[0] << 1, 0, 0, 0;
  G[1] << 0, 0, 0, 0;
  EXPECT_NEAR(euclidean_norm<2>(G), 1.0, 1e-15);
  G[1] << 0, 0, 0, 1;  // rows (1,0,0,0) and (0,0,0,1): both singular values 1
  EXPECT_NEAR(euclidean_norm<2>(G), 1.0, 1e-15);
  G[1] << 1, 0, 0, 0;  // two equal rows: norm √2
  EXPECT_NEAR(euclidean_norm<2>(G), std::sqrt(2.0), 1e-15);
}

TEST(MetricCore, SignatureChecks) {
  EXPECT_EQ(signature_of<3>(Vec<3>(1, -2, 3).asDiagonal()), (Signature{2, 1}));
  EXPECT_THROW(signature_of<2>(Vec<2>(1, 0).asDiagonal()), Error);
  auto lor = make_builtin<3>("c11_lorentz");
  EXPECT_EQ(lor->signature(), (Signature{1, 2}));
  EXPECT_EQ(signature_of<3>(lor->g(Vec<3>(0.2, -0.4, 0.1))), (Signature{1, 2}));
}

TEST(MetricCore, Errors) {
  auto s = make_builtin<2>("sphere");
  try {
    s->g(Vec<2>(40, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
  C11TestMetric<2> c11;
  try {
    riemann_curvature(c11, Vec<2>(0.1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientRegularity);
  }
  try {
    sectional_curvature<2>(*s, Vec<2>(0, 0), Vec<2>(1, 0), Vec<2>(2, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegeneratePlane);
  }
  EXPECT_THROW(make_builtin<2>("no_such_metric"), Error);
  EXPECT_THROW(make_builtin<2>("schwarzschild"), Error);
}

TEST(MetricCore, SupBoundsSphere) {
  auto s = make_builtin<2>("sphere");
  const auto b = sup_bounds<2>(*s, Vec<2>::Zero(), 0.1, 0.0125);
  // at 0: g = 4δ, Γ = 0, ‖R‖_E = √2 for the 2D round sphere chart; bounds dominate the grid maxima
  EXPECT_GE(b.K1, b.max_R);
  EXPECT_GE(b.K2, b.max_gamma);
  EXPECT_GT(b.K1, 0.0);
  double direct = 0;
  for (const auto& x : ball_grid<2>(Vec<2>::Zero(), 0.1, 0.01))
    direct = std::max(direct, euclidean_norm<2>(christoffel(*s, x)));
  EXPECT_GE(b.K2, direct);
}

TEST(MetricCore, SupBoundsMonotoneInRadius) {
  auto s = make_builtin<2>("sphere");
  double prev = 0;
  for (double r : {0.05, 0.1, 0.2, 0.4}) {
    const auto b = sup_bounds<2>(*s, Vec<2>::Zero(), r, 0.0125);
    EXPECT_GE(b.max_gamma, prev);
    prev = b.max_gamma;
  }
}

TEST(MetricCore, GridMetricReproducesQuadratics) {
  // Catmull–Rom reproduces quadratics exactly on interior cells.
  GridLayout<2> lay;
  lay.origin = Vec<2>(-1, -1);
  lay.spacing = Vec<2>(0.1, 0.1);
  lay.shape = {21, 21};
  auto quad = [](const Vec<2>& x) { return 2.0 + 0.3 * x[0] * x[0] + 0.1 * x[0] * x[1]; };
  std::vector<double> data(lay.node_count() * 3);
  std::array<int, 2> idx{};
  for (idx[0] = 0; idx[0] < 21; ++idx[0])
    for (idx[1] = 0; idx[1] < 21; ++idx[1]) {
      const auto x = lay.position(idx);
      const std::size_t fl = lay.flat(idx);
      data[fl * 3 + sym_index(2, 0, 0)] = quad(x);
      data[fl * 3 + sym_index(2, 0, 1)] = 0.0;
      data[fl * 3 + sym_index(2, 1, 1)] = 1.0;
    }
  GridMetric<2> gm("q", Signature{2, 0}, lay, GridMetric<2>::Derivatives::None, data);
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Vec<2> x = rng.in_ball<2>(0.8);
    EXPECT_NEAR(gm.g(x)(0, 0), quad(x), 1e-12);
    const auto jet = gm.jet(x, 1);
    EXPECT_NEAR(jet.dg[0](0, 0), 0.6 * x[0] + 0.1 * x[1], 1e-10);
  }
  EXPECT_FALSE(gm.has_curvature());
}

TEST(MetricCore, BallGridIsNested) {
  const auto a = ball_grid<2>(Vec<2>::Zero(), 0.3, 0.1), b = ball_grid<2>(Vec<2>::Zero(), 0.5, 0.1);
  EXPECT_LT(a.size(), b.size());
  for (const auto& x : a) {
    bool found = false;
    for (const auto& y : b) found = found || (x - y).norm() < 1e-15;
    EXPECT_TRUE(found);
  }
}
