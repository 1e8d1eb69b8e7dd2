#include <gtest/gtest.h>

#include <cstdlib>
#include <numbers>

#include "lipexp/lipexp.hpp"

using namespace lipexp;

namespace {

// Scoped LIPEXP_WORKERS override.
class Workers {
 public:
  explicit Workers(const char* n) {
    if (const char* old = std::getenv("LIPEXP_WORKERS")) old_ = old;
    setenv("LIPEXP_WORKERS", n, 1);
  }
  ~Workers() {
    if (old_.empty())
      unsetenv("LIPEXP_WORKERS");
    else
      setenv("LIPEXP_WORKERS", old_.c_str(), 1);
  }

 private:
  std::string old_;
};

}  // namespace

TEST(SnAlpha, ClosedForms) {
  EXPECT_NEAR(sn_alpha(-1.0, 1.0), 1.1752011936438014, 1e-15);
  EXPECT_NEAR(sn_alpha(1.0, std::numbers::pi / 2), 1.0, 1e-15);
  EXPECT_NEAR(sn_alpha(4.0, 0.3), std::sin(0.6) / 2, 1e-15);
  EXPECT_EQ(sn_alpha(0.0, 2.0), 2.0);
  EXPECT_THROW(sn_alpha(1.0, -0.1), Error);
}

TEST(SnAlpha, TaylorBranchIsContinuous) {
  // both sides of the |αt²| = 1e-8 switch agree with the exact formula
  for (double a : {1e-9, -1e-9, 2e-8, -2e-8}) {
    const double exact = a > 0 ? std::sin(std::sqrt(a)) / std::sqrt(a) : std::sinh(std::sqrt(-a)) / std::sqrt(-a);
    EXPECT_NEAR(sn_alpha(a, 1.0), exact, 1e-15);
  }
}

TEST(SampledCheck, ViolationRuleAndInconclusive) {
  auto rep = run_sampled_check("t", "s", 30, 5, [](std::size_t i, Rng&) {
    if (i % 10 == 0) throw Error(ErrorKind::LeftDomain, "gone");
    SampleOutcome o;
    o.margin = i < 15 ? -1e-3 : 0.5;
    o.debit = i < 5 ? 1e-2 : 0.0;  // debit excuses small negative margins
    return o;
  });
  EXPECT_EQ(rep.samples, 30u);
  EXPECT_EQ(rep.inconclusive, 3u);
  // i = 5..14 except 10 are violations
  EXPECT_EQ(rep.violation_count, 9u);
  EXPECT_EQ(rep.violations.size(), 9u);
  EXPECT_EQ(rep.violations.front().index, 5u);
  EXPECT_EQ(rep.passed, 18u);
  EXPECT_EQ(rep.worst_margin, -1e-3);
  EXPECT_EQ(rep.stats.at("inconclusive.LeftDomain"), 3.0);
  EXPECT_FALSE(rep.ok());
}

TEST(SampledCheck, RecordsAtMostTenViolations) {
  auto rep = run_sampled_check("t", "s", 50, 1, [](std::size_t, Rng&) {
    SampleOutcome o;
    o.margin = -1;
    return o;
  });
  EXPECT_EQ(rep.violation_count, 50u);
  EXPECT_EQ(rep.violations.size(), kMaxRecordedViolations);
}

TEST(SampledCheck, IndependentOfWorkerCount) {
  auto s = make_builtin<2>("sphere");
  const auto cert = full_certificate<2>(s, Vec<2>::Zero()).cert;
  VerificationReport a, b;
  {
    Workers w("1");
    a = verify_bilipschitz<2>(*s, Vec<2>::Zero(), cert, 200, 7);
  }
  {
    Workers w("3");
    b = verify_bilipschitz<2>(*s, Vec<2>::Zero(), cert, 200, 7);
  }
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.stats, b.stats);
  EXPECT_EQ(a.passed, b.passed);
}

TEST(Bilipschitz, FlatMarginFromConstants) {
  auto f = make_builtin<2>("flat");
  const auto cert = full_certificate<2>(f, Vec<2>::Zero()).cert;
  const auto rep = verify_bilipschitz<2>(*f, Vec<2>::Zero(), cert, 500, 3);
  EXPECT_TRUE(rep.ok());
  EXPECT_NEAR(rep.worst_margin, 1.0 - cert.c4, 1e-12);
}

TEST(Bilipschitz, TightConstantsDetected) {
  // stereographic exp_0 stretches: ‖exp u − exp v‖ > ‖u − v‖ somewhere
  auto s = make_builtin<2>("sphere");
  const auto rep = verify_bilipschitz<2>(*s, Vec<2>::Zero(), 1.0, 1.0, 0.5, std::numeric_limits<double>::infinity(),
                                         200, 3);
  EXPECT_GT(rep.violation_count, 0u);
}

TEST(Bilipschitz, SphereCertificateHolds) {
  auto s = make_builtin<2>("sphere");
  const auto run = full_certificate<2>(s, Vec<2>(0.3, -0.2));
  EXPECT_TRUE(verify_bilipschitz<2>(*s, Vec<2>(0.3, -0.2), run.cert, 500, 11).ok());
  for (const auto& m : run.covered())
    EXPECT_TRUE(verify_bilipschitz<2>(*m, Vec<2>(0.3, -0.2), run.cert, 100, 11).ok());
}

TEST(Jacobi, EnvelopeRespectedOnSphere) {
  auto s = make_builtin<2>("sphere");
  const auto cert = full_certificate<2>(s, Vec<2>::Zero()).cert;
  const auto rep = verify_jacobi_bounds<2>(*s, Vec<2>::Zero(), cert.r2, 200, 2, {}, std::make_pair(cert.C1, cert.C2));
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.inconclusive, 0u);
  EXPECT_GT(rep.worst_margin, -1e-12);  // the envelope is tight at s = 0
}

TEST(Speed, FlatSpeedConstant) {
  auto f = make_builtin<3>("flat");
  const auto rep = verify_speed_sandwich<3>(*f, Vec<3>::Zero(), 0.5, 50, 1);
  EXPECT_TRUE(rep.ok());
  EXPECT_NEAR(rep.worst_margin, 0.5, 1e-12);
}

TEST(Pullback, SphereSandwich) {
  auto s = make_builtin<2>("sphere");
  const auto cert = full_certificate<2>(s, Vec<2>::Zero()).cert;
  EXPECT_TRUE(verify_pullback_sandwich<2>(*s, Vec<2>::Zero(), cert, 100, 4).ok());
}

TEST(Injectivity, FlatHasNoViolations) {
  auto f = make_builtin<2>("flat");
  InjectivityOptions opt;
  opt.grid_points = 11;
  const auto rep = verify_injectivity<2>(*f, Vec<2>::Zero(), 1.0, 1.0 / 48, opt);
  EXPECT_TRUE(rep.ok());
  EXPECT_GT(rep.samples, 1000u);
}

TEST(Injectivity, ExpWrapsAroundPastPi) {
  // g = δ at (1, 0): every |v| = π lands on the antipode (−1, 0)
  auto s = make_builtin<2>("sphere");
  InjectivityOptions opt;
  opt.spacing = 2 * std::numbers::pi / 36;
  const auto rep = verify_injectivity<2>(*s, Vec<2>(1.0, 0.0), 3.5, 1e-3, opt);
  EXPECT_GT(rep.violation_count, 0u);
  EXPECT_GT(rep.stats.at("failed_points"), 0.0);  // directions along the x¹ axis pass through ∞
}

TEST(Injectivity, PairBudgetSubsamples) {
  auto f = make_builtin<2>("flat");
  InjectivityOptions opt;
  opt.grid_points = 21;
  opt.pair_budget = 1000;
  const auto rep = verify_injectivity<2>(*f, Vec<2>::Zero(), 1.0, 0.5, opt);
  EXPECT_EQ(rep.samples, 1000u);
  EXPECT_EQ(rep.notes.size(), 1u);
  opt.point_budget = 10;
  EXPECT_THROW(verify_injectivity<2>(*f, Vec<2>::Zero(), 1.0, 0.5, opt), Error);
}

TEST(Rauch, SpherePasses) {
  auto s = make_builtin<2>("sphere");
  const auto rep = verify_rauch<2>(*s, Vec<2>(1.0, 0.0), -0.01, 1.0, 1.0, 300, 8);
  EXPECT_TRUE(rep.ok());
  EXPECT_NEAR(rep.stats.at("sampled_K_min"), 1.0, 1e-8);
}

TEST(Rauch, WrongCurvatureRangeIsReported) {
  auto s = make_builtin<2>("sphere");
  try {
    verify_rauch<2>(*s, Vec<2>(1.0, 0.0), -2.0, -1.0, 0.5, 20, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CurvatureOutOfRange);
  }
  EXPECT_THROW(verify_rauch<2>(*s, Vec<2>(1.0, 0.0), 0.0, 1.0, 3.5, 20, 8), Error);  // r ≥ π/√κ
  auto l = make_builtin<2>("c11_lorentz");
  EXPECT_THROW(verify_rauch<2>(*l, Vec<2>::Zero(), 0.0, 1.0, 0.5, 20, 8), Error);
}

TEST(Rauch, HyperbolicUsesSinh) {
  auto h = make_builtin<2>("hyperbolic");
  const auto rep = verify_rauch<2>(*h, Vec<2>::Zero(), -1.0, 0.01, 1.0, 200, 8);
  EXPECT_TRUE(rep.ok());
  EXPECT_LT(rep.worst_margin, 1e-6);  // the upper bound is sharp at K ≡ −1
}
