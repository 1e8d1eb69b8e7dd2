#include <gtest/gtest.h>

#include <numbers>

#include "lipexp/lipexp.hpp"

using namespace lipexp;

TEST(Geodesic, FlatExpIsTranslation) {
  auto f = make_builtin<3>("flat");
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vec<3> p = rng.in_ball<3>(1.0), v = rng.in_ball<3>(2.0);
    EXPECT_LT((exp_map<3>(*f, p, v) - (p + v)).norm(), 1e-12);
  }
  EXPECT_EQ(exp_map<3>(*f, Vec<3>::Zero(), Vec<3>::Zero()), Vec<3>::Zero());
}

TEST(Geodesic, StereographicGreatCircle) {
  // metric speed 2|v|: exp_0(v) = tan(|v|) v/|v|
  auto s = make_builtin<2>("sphere");
  double err = 0;
  const Vec<2> q = exp_map<2>(*s, Vec<2>::Zero(), Vec<2>(0.5, 0.0), std::numeric_limits<double>::infinity(), {}, &err);
  EXPECT_NEAR(q[0], 0.5463024898437905, 1e-8);
  EXPECT_NEAR(q[1], 0.0, 1e-14);
  EXPECT_LT(err, 1e-8);
  const Vec<2> r = exp_map<2>(*s, Vec<2>::Zero(), Vec<2>(0.0, -0.5));
  EXPECT_NEAR(r[1], -0.5463024898437905, 1e-8);
}

TEST(Geodesic, EnergyConserved) {
  auto s = make_builtin<3>("schwarzschild");
  const auto path = integrate_geodesic<3>(*s, Vec<3>(4, 0, 0), Vec<3>(0.1, 0.3, -0.2), 3.0);
  const double e0 = energy<3>(*s, path.samples.front());
  for (const auto& st : path.samples) EXPECT_NEAR(energy<3>(*s, st), e0, 1e-10 * e0);
}

TEST(Geodesic, LorentzianGeodesicsIntegrate) {
  auto l = make_builtin<3>("c11_lorentz");
  const auto path = integrate_geodesic<3>(*l, Vec<3>::Zero(), Vec<3>(0.2, 0.1, 0.05), 1.0);
  const double e0 = energy<3>(*l, path.samples.front());
  EXPECT_NEAR(energy<3>(*l, path.samples.back()), e0, 1e-9);
  EXPECT_LT(path.error_estimate, 1e-8);
}

TEST(Geodesic, HermiteInterpolationBetweenNodes) {
  auto s = make_builtin<2>("sphere");
  IntegratorSettings st;
  st.step = 1e-3;
  const auto path = integrate_geodesic<2>(*s, Vec<2>::Zero(), Vec<2>(0.5, 0.0), 1.0, st);
  EXPECT_NEAR(path.at(0.5).c[0], std::tan(0.25), 1e-10);
}

TEST(Geodesic, LeftDomainReportsExitTime) {
  auto h = make_builtin<2>("hyperbolic");  // box ±3
  try {
    integrate_geodesic<2>(*h, Vec<2>::Zero(), Vec<2>(1.0, 0.0), 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LeftDomain);
    ASSERT_TRUE(e.exit_time().has_value());
    EXPECT_NEAR(*e.exit_time(), 3.0, 0.01);  // x¹ moves at unit speed along this geodesic
  }
}

TEST(Geodesic, OutsideCommonDomain) {
  auto f = make_builtin<2>("flat");
  try {
    exp_map<2>(*f, Vec<2>::Zero(), Vec<2>(1.0, 0.0), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutsideCommonDomain);
  }
}

TEST(Geodesic, CoarseStepRejected) {
  auto s = make_builtin<2>("sphere");
  IntegratorSettings st;
  st.step = 0.25;
  EXPECT_THROW(integrate_geodesic<2>(*s, Vec<2>::Zero(), Vec<2>(1.0, 0.0), 1.0, st), Error);
}

TEST(Jacobi, FlatFieldIsLinear) {
  auto f = make_builtin<2>("flat");
  const auto path = integrate_geodesic<2>(*f, Vec<2>::Zero(), Vec<2>(1.0, 0.0), 1.0);
  const auto sol = jacobi_field<2>(*f, path, Vec<2>(0.1, 0), Vec<2>(0, 1));
  for (const auto& s : sol.samples) {
    EXPECT_NEAR(s.J[0], 0.1, 1e-14);
    EXPECT_NEAR(s.J[1], s.s, 1e-14);
  }
}

TEST(Jacobi, SphereDExpIsSinOverT) {
  // ‖d exp_p(tv)[t w]‖ / (t‖w‖) = sin t / t in metric norms, unit v ⊥ w.
  auto s = make_builtin<2>("sphere");
  const Vec<2> p(1.0, 0.0);  // g = δ there, so unit vectors are metric-unit
  IntegratorSettings st;
  st.step = 1e-3;
  for (double t : {0.1, 0.5, 1.0}) {
    const Vec<2> v(0.0, 1.0), w(1.0, 0.0);
    const Vec<2> dv = d_exp<2>(*s, p, t * v, t * w, std::numeric_limits<double>::infinity(), st);
    const Vec<2> q = exp_map<2>(*s, p, t * v, std::numeric_limits<double>::infinity(), st);
    const double norm = std::sqrt(dv.dot(s->g(q) * dv));
    EXPECT_NEAR(norm / t, std::sin(t) / t, 1e-6);
  }
}

TEST(Jacobi, RequiresCurvature) {
  auto c = make_builtin<2>("c11_test");
  const auto path = integrate_geodesic<2>(*c, Vec<2>::Zero(), Vec<2>(0.1, 0.0), 1.0);
  try {
    jacobi_field<2>(*c, path, Vec<2>::Zero(), Vec<2>(0, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientRegularity);
  }
}

TEST(Jacobi, DExpMatrixMatchesFiniteDifferences) {
  auto s = make_builtin<2>("sphere");
  const Vec<2> p(0.2, -0.1), v(0.3, 0.2);
  const double inf = std::numeric_limits<double>::infinity();
  const Mat<2> A = d_exp_matrix<2>(*s, p, v, inf);
  const double h = 1e-5;
  for (int a = 0; a < 2; ++a) {
    const Vec<2> e = h * Vec<2>::Unit(a);
    const Vec<2> fd = (exp_map<2>(*s, p, v + e, inf) - exp_map<2>(*s, p, v - e, inf)) / (2 * h);
    EXPECT_LT((A.col(a) - fd).norm(), 1e-6);
  }
}
