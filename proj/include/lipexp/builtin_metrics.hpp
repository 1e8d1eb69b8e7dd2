#pragma once

#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "lipexp/metric_field.hpp"

namespace lipexp {

using MetricParams = std::map<std::string, double>;

namespace detail {

inline double param(const MetricParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace detail

/// Constant metric diag(+1 × positive, −1 × negative).
template <int N>
class FlatMetric final : public MetricField<N> {
 public:
  explicit FlatMetric(Signature sig = {N, 0}, double half_width = 10.0)
      : MetricField<N>("flat", sig,
                       ChartDomain<N>::box(Vec<N>::Constant(-half_width), Vec<N>::Constant(half_width))) {
    g_ = Mat<N>::Identity();
    for (int i = sig.positive; i < N; ++i) g_(i, i) = -1.0;
  }
  Regularity regularity() const override { return Regularity::SmoothAnalytic; }
  int max_order() const override { return 2; }

 protected:
  MetricJet<N> evaluate(const Vec<N>&, int) const override {
    MetricJet<N> j;
    j.g = g_;
    for (auto& m : j.dg) m.setZero();
    for (auto& row : j.d2g)
      for (auto& m : row) m.setZero();
    return j;
  }

 private:
  Mat<N> g_;
};

/// g = Ω(x) δ with Ω supplied together with its gradient and Hessian.
template <int N>
class ConformallyFlatMetric final : public MetricField<N> {
 public:
  struct Factor {
    double value;
    Vec<N> grad;
    Mat<N> hess;
  };
  using FactorFn = std::function<Factor(const Vec<N>&)>;

  ConformallyFlatMetric(std::string name, ChartDomain<N> domain, FactorFn factor)
      : MetricField<N>(std::move(name), {N, 0}, std::move(domain)), factor_(std::move(factor)) {}

  Regularity regularity() const override { return Regularity::SmoothAnalytic; }
  int max_order() const override { return 2; }

 protected:
  MetricJet<N> evaluate(const Vec<N>& x, int order) const override {
    const Factor f = factor_(x);
    MetricJet<N> j;
    j.g = f.value * Mat<N>::Identity();
    for (int k = 0; k < N; ++k) j.dg[k] = f.grad[k] * Mat<N>::Identity();
    if (order >= 2)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) j.d2g[k][l] = f.hess(k, l) * Mat<N>::Identity();
    return j;
  }

 private:
  FactorFn factor_;
};

/// Unit round sphere in stereographic coordinates, g = 4/(1+|x|²)² δ. The
/// origin is the pole opposite the projection point; |x| = 1 is the equator.
template <int N>
MetricPtr<N> make_sphere(double chart_radius = 30.0) {
  auto factor = [](const Vec<N>& x) {
    const double s = 1.0 + x.squaredNorm();
    typename ConformallyFlatMetric<N>::Factor f;
    f.value = 4.0 / (s * s);
    f.grad = -16.0 * x / (s * s * s);
    f.hess = -16.0 / (s * s * s) * Mat<N>::Identity() + 96.0 / (s * s * s * s) * x * x.transpose();
    return f;
  };
  return std::make_shared<ConformallyFlatMetric<N>>(
      "sphere", ChartDomain<N>::ball(Vec<N>::Zero(), chart_radius), factor);
}

/// Schwarzschild t = const slice in isotropic coordinates, g = (1 + M/2r)⁴ δ.
inline MetricPtr<3> make_schwarzschild(double mass = 1.0) {
  auto factor = [mass](const Vec<3>& x) {
    const double r = x.norm();
    const double psi = 1.0 + mass / (2.0 * r);
    const Vec<3> dpsi = -mass * x / (2.0 * r * r * r);
    const Mat<3> d2psi = -0.5 * mass *
                         (Mat<3>::Identity() / (r * r * r) - 3.0 * x * x.transpose() / std::pow(r, 5));
    ConformallyFlatMetric<3>::Factor f;
    f.value = std::pow(psi, 4);
    f.grad = 4.0 * std::pow(psi, 3) * dpsi;
    f.hess = 12.0 * psi * psi * dpsi * dpsi.transpose() + 4.0 * std::pow(psi, 3) * d2psi;
    return f;
  };
  Vec<3> lo(1.5 * mass, -3.5 * mass, -3.5 * mass);
  Vec<3> hi(8.5 * mass, 3.5 * mass, 3.5 * mass);
  return std::make_shared<ConformallyFlatMetric<3>>("schwarzschild", ChartDomain<3>::box(lo, hi), factor);
}

/// Unit sphere in polar coordinates (θ, φ): diag(1, sin²θ).
class SpherePolarMetric final : public MetricField<2> {
 public:
  SpherePolarMetric()
      : MetricField<2>("sphere_polar", {2, 0},
                       ChartDomain<2>::box(Vec<2>(0.1, -10.0), Vec<2>(std::numbers::pi - 0.1, 10.0))) {}
  Regularity regularity() const override { return Regularity::SmoothAnalytic; }
  int max_order() const override { return 2; }

 protected:
  MetricJet<2> evaluate(const Vec<2>& x, int order) const override {
    const double s = std::sin(x[0]), c = std::cos(x[0]);
    MetricJet<2> j;
    j.g << 1.0, 0.0, 0.0, s * s;
    j.dg[0] << 0.0, 0.0, 0.0, 2.0 * s * c;
    j.dg[1].setZero();
    if (order >= 2) {
      for (auto& row : j.d2g)
        for (auto& m : row) m.setZero();
      j.d2g[0][0] << 0.0, 0.0, 0.0, 2.0 * (c * c - s * s);
    }
    return j;
  }
};

/// Hyperbolic plane chart diag(1, e^{2x¹}).
class HyperbolicMetric final : public MetricField<2> {
 public:
  HyperbolicMetric()
      : MetricField<2>("hyperbolic", {2, 0}, ChartDomain<2>::box(Vec<2>(-3.0, -3.0), Vec<2>(3.0, 3.0))) {}
  Regularity regularity() const override { return Regularity::SmoothAnalytic; }
  int max_order() const override { return 2; }

 protected:
  MetricJet<2> evaluate(const Vec<2>& x, int order) const override {
    const double e = std::exp(2.0 * x[0]);
    MetricJet<2> j;
    j.g << 1.0, 0.0, 0.0, e;
    j.dg[0] << 0.0, 0.0, 0.0, 2.0 * e;
    j.dg[1].setZero();
    if (order >= 2) {
      for (auto& row : j.d2g)
        for (auto& m : row) m.setZero();
      j.d2g[0][0] << 0.0, 0.0, 0.0, 4.0 * e;
    }
    return j;
  }
};

/// C^{1,1} test metric: g₁₁ = 1 + x¹|x¹|, all other components δ_ij.
/// Second derivatives jump at x¹ = 0, so only first derivatives are exposed.
template <int N>
class C11TestMetric final : public MetricField<N> {
 public:
  C11TestMetric()
      : MetricField<N>("c11_test", {N, 0},
                       ChartDomain<N>::box(Vec<N>::Constant(-0.9), Vec<N>::Constant(0.9))) {}
  Regularity regularity() const override { return Regularity::C11Analytic; }
  int max_order() const override { return 1; }

 protected:
  MetricJet<N> evaluate(const Vec<N>& x, int) const override {
    MetricJet<N> j;
    j.g.setIdentity();
    j.g(0, 0) = 1.0 + x[0] * std::abs(x[0]);
    for (auto& m : j.dg) m.setZero();
    j.dg[0](0, 0) = 2.0 * std::abs(x[0]);
    return j;
  }
};

/// Lorentzian C^{1,1} variant of signature (1, N−1):
/// g₁₁ = 1 + ½ x²|x²|, g_jj = −1 (j ≥ 2). The lapse depends on a spatial
/// coordinate, so the curvature is nonzero almost everywhere.
template <int N>
class C11LorentzMetric final : public MetricField<N> {
 public:
  C11LorentzMetric()
      : MetricField<N>("c11_lorentz", {1, N - 1},
                       ChartDomain<N>::box(Vec<N>::Constant(-0.9), Vec<N>::Constant(0.9))) {}
  Regularity regularity() const override { return Regularity::C11Analytic; }
  int max_order() const override { return 1; }

 protected:
  MetricJet<N> evaluate(const Vec<N>& x, int) const override {
    MetricJet<N> j;
    j.g = -Mat<N>::Identity();
    j.g(0, 0) = 1.0 + 0.5 * x[1] * std::abs(x[1]);
    for (auto& m : j.dg) m.setZero();
    j.dg[1](0, 0) = std::abs(x[1]);
    return j;
  }
};

/// a·g + b·h on the intersection of both domains (taken as g's domain).
template <int N>
class LinearCombinationMetric final : public MetricField<N> {
 public:
  LinearCombinationMetric(double a, MetricPtr<N> g, double b, MetricPtr<N> h)
      : MetricField<N>("combination", g->signature(), g->domain()),
        a_(a), b_(b), g_(std::move(g)), h_(std::move(h)) {}
  Regularity regularity() const override {
    return std::min(g_->max_order(), h_->max_order()) >= 2 ? Regularity::SmoothAnalytic
                                                           : Regularity::C11Analytic;
  }
  int max_order() const override { return std::min(g_->max_order(), h_->max_order()); }

 protected:
  MetricJet<N> evaluate(const Vec<N>& x, int order) const override {
    const MetricJet<N> jg = g_->jet(x, order), jh = h_->jet(x, order);
    MetricJet<N> j;
    j.g = a_ * jg.g + b_ * jh.g;
    for (int k = 0; k < N; ++k) j.dg[k] = a_ * jg.dg[k] + b_ * jh.dg[k];
    if (order >= 2)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) j.d2g[k][l] = a_ * jg.d2g[k][l] + b_ * jh.d2g[k][l];
    return j;
  }

 private:
  double a_, b_;
  MetricPtr<N> g_, h_;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  std::vector<int> dimensions;
  std::string regularity;
  int default_dimension;
};

inline const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"flat", "constant diag(+1..., -1...) metric; params: negative (count of -1 entries)", {2, 3, 4},
       "smooth-analytic", 2},
      {"sphere", "unit round sphere, stereographic chart 4/(1+|x|^2)^2 delta", {2, 3, 4}, "smooth-analytic", 2},
      {"sphere_polar", "unit round sphere, polar chart diag(1, sin^2 theta)", {2}, "smooth-analytic", 2},
      {"hyperbolic", "hyperbolic plane chart diag(1, exp(2 x1))", {2}, "smooth-analytic", 2},
      {"schwarzschild", "Schwarzschild spatial slice, isotropic chart (1+M/2r)^4 delta; params: mass", {3},
       "smooth-analytic", 3},
      {"c11_test", "C^{1,1} test metric g11 = 1 + x1|x1|, others delta", {2, 3, 4}, "C11-analytic", 2},
      {"c11_lorentz", "Lorentzian C^{1,1} metric g11 = 1 + x2|x2|/2, g_jj = -1", {2, 3, 4}, "C11-analytic", 2},
  };
  return entries;
}

/// Builds a builtin metric by catalog name.
template <int N>
MetricPtr<N> make_builtin(const std::string& name, const MetricParams& params = {}) {
  if (name == "flat") {
    const int negative = static_cast<int>(detail::param(params, "negative", 0));
    if (negative < 0 || negative > N) throw Error(ErrorKind::InvalidArgument, "flat: bad negative count");
    return std::make_shared<FlatMetric<N>>(Signature{N - negative, negative});
  }
  if (name == "sphere") return make_sphere<N>(detail::param(params, "chart_radius", 30.0));
  if (name == "c11_test") return std::make_shared<C11TestMetric<N>>();
  if (name == "c11_lorentz") return std::make_shared<C11LorentzMetric<N>>();
  if constexpr (N == 2) {
    if (name == "sphere_polar") return std::make_shared<SpherePolarMetric>();
    if (name == "hyperbolic") return std::make_shared<HyperbolicMetric>();
  }
  if constexpr (N == 3) {
    if (name == "schwarzschild") return make_schwarzschild(detail::param(params, "mass", 1.0));
  }
  throw Error(ErrorKind::InvalidArgument,
              "unknown builtin metric '" + name + "' for dimension " + std::to_string(N));
}

}  // namespace lipexp
