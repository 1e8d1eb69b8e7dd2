#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <vector>

#include "lipexp/grid_metric.hpp"
#include "lipexp/parallel.hpp"

namespace lipexp {

/// Radial profile ρ on the unit ball with gradient and Hessian. Outside the
/// unit ball all three vanish.
template <int N>
struct KernelProfile {
  std::string name;
  std::function<double(const Vec<N>&)> value;
  std::function<Vec<N>(const Vec<N>&)> gradient;
  std::function<Mat<N>(const Vec<N>&)> hessian;
};

/// Standard bump exp(−1/(1−|y|²)) on |y| < 1.
template <int N>
KernelProfile<N> bump_profile() {
  KernelProfile<N> p;
  p.name = "bump exp(-1/(1-|y|^2))";
  p.value = [](const Vec<N>& y) {
    const double s = 1.0 - y.squaredNorm();
    return s > 0 ? std::exp(-1.0 / s) : 0.0;
  };
  p.gradient = [](const Vec<N>& y) -> Vec<N> {
    const double s = 1.0 - y.squaredNorm();
    if (s <= 0) return Vec<N>::Zero();
    return std::exp(-1.0 / s) * (-2.0 / (s * s)) * y;
  };
  // ∂_ab ρ = ρ [4 y_a y_b / s⁴ − 8 y_a y_b / s³ − 2 δ_ab / s²]
  p.hessian = [](const Vec<N>& y) -> Mat<N> {
    const double s = 1.0 - y.squaredNorm();
    if (s <= 0) return Mat<N>::Zero();
    const double rho = std::exp(-1.0 / s);
    return rho * ((4.0 / std::pow(s, 4) - 8.0 / std::pow(s, 3)) * y * y.transpose() -
                  (2.0 / (s * s)) * Mat<N>::Identity());
  };
  return p;
}

/// Discretized ρ_ε(z) = C ε⁻ᴺ ρ(z/ε) on the nodes z = h·o (o ∈ ℤᴺ, |z| < ε).
/// The stored weights already include the cell volume hᴺ, so a convolution
/// is a plain weighted sum; C makes the discrete integral exactly 1.
template <int N>
struct MollifierKernel {
  double epsilon = 0.0;
  double spacing = 0.0;
  double normalization = 1.0;  // C
  int reach = 0;               // max |o_a|
  std::string profile_name;
  std::vector<std::array<int, N>> offsets;
  std::vector<double> w0;
  std::vector<Vec<N>> w1;  // hᴺ ∇ρ_ε(z)
  std::vector<Mat<N>> w2;  // hᴺ ∇²ρ_ε(z)

  std::function<double(const Vec<N>&)> profile_value;

  /// ρ_ε(z) at an arbitrary point (0 outside the support).
  double value(const Vec<N>& z) const {
    return normalization * std::pow(epsilon, -N) * profile_value(z / epsilon);
  }
  double integral() const {
    double s = 0.0;
    for (double w : w0) s += w;
    return s;
  }
  Vec<N> first_moment() const {
    Vec<N> m = Vec<N>::Zero();
    for (std::size_t j = 0; j < offsets.size(); ++j) m += w0[j] * node(j);
    return m;
  }
  Vec<N> node(std::size_t j) const {
    Vec<N> z;
    for (int a = 0; a < N; ++a) z[a] = offsets[j][a] * spacing;
    return z;
  }
};

namespace detail {

// Coarse grids (ε/h ≈ 6) integrate ∇ρ and ∇²ρ poorly, and the error is
// amplified by ε⁻¹ and ε⁻² when convolving a constant. Odd moments already
// vanish on the symmetric node set; here the even ones are fixed so that the
// derivative weights differentiate polynomials of degree ≤ 2 exactly.
template <int N>
void match_derivative_moments(MollifierKernel<N>& k) {
  const std::size_t n = k.offsets.size();
  for (int a = 0; a < N; ++a) {
    // Σ w1_a z_a = −1
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) m += k.w1[j][a] * k.node(j)[a];
    for (std::size_t j = 0; j < n; ++j) k.w1[j][a] *= -1.0 / m;
  }
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) {
      // Σ w2_ab z_a z_b = 1
      double m = 0.0;
      for (std::size_t j = 0; j < n; ++j) m += k.w2[j](a, b) * k.node(j)[a] * k.node(j)[b];
      for (std::size_t j = 0; j < n; ++j) {
        k.w2[j](a, b) /= m;
        k.w2[j](b, a) = k.w2[j](a, b);
      }
    }
  // Diagonal: w2_aa + β w0 + γ w0 z_a²/ε² + η w0 z_c²/ε² (any c ≠ a) with
  // Σ = 0, Σ z_a² = 2, Σ z_c² = 0. Coordinate permutation symmetry of the
  // node set makes one c representative.
  const double e2 = k.epsilon * k.epsilon;
  for (int a = 0; a < N; ++a) {
    const int c = (a + 1) % N;
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs(0.0, 2.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec<N> z = k.node(j);
      const double basis[3] = {k.w0[j], k.w0[j] * z[a] * z[a] / e2, k.w0[j] * z[c] * z[c] / e2};
      const double tests[3] = {1.0, z[a] * z[a], z[c] * z[c]};
      for (int r = 0; r < 3; ++r) {
        rhs[r] -= k.w2[j](a, a) * tests[r];
        for (int q = 0; q < 3; ++q) A(r, q) += basis[q] * tests[r];
      }
    }
    const Eigen::Vector3d coef = A.fullPivLu().solve(rhs);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec<N> z = k.node(j);
      k.w2[j](a, a) += k.w0[j] * (coef[0] + coef[1] * z[a] * z[a] / e2 + coef[2] * z[c] * z[c] / e2);
    }
  }
}

}  // namespace detail

/// Requires epsilon ≥ 4·grid_spacing (UnderResolved otherwise).
template <int N>
MollifierKernel<N> build_kernel(double epsilon, double grid_spacing,
                                const KernelProfile<N>& profile = bump_profile<N>()) {
  if (!(epsilon > 0) || !(grid_spacing > 0))
    throw Error(ErrorKind::InvalidArgument, "kernel scale and spacing must be positive");
  if (epsilon < 4.0 * grid_spacing * (1 - 1e-12))
    throw Error(ErrorKind::UnderResolved, "epsilon must be at least 4 grid spacings");
  MollifierKernel<N> k;
  k.epsilon = epsilon;
  k.spacing = grid_spacing;
  k.profile_name = profile.name;
  k.profile_value = profile.value;
  k.reach = static_cast<int>(std::ceil(epsilon / grid_spacing));
  const double cell = std::pow(grid_spacing, N);
  std::array<int, N> o;
  o.fill(-k.reach);
  double raw_integral = 0.0;
  for (;;) {
    Vec<N> y;
    for (int a = 0; a < N; ++a) y[a] = o[a] * grid_spacing / epsilon;
    if (y.squaredNorm() < 1.0) {
      const double v = profile.value(y);
      if (v > 0) {
        k.offsets.push_back(o);
        k.w0.push_back(cell * std::pow(epsilon, -N) * v);
        k.w1.push_back(cell * std::pow(epsilon, -N - 1) * profile.gradient(y));
        k.w2.push_back(cell * std::pow(epsilon, -N - 2) * profile.hessian(y));
        raw_integral += k.w0.back();
      }
    }
    int a = 0;
    while (a < N && ++o[a] > k.reach) o[a++] = -k.reach;
    if (a == N) break;
  }
  k.normalization = 1.0 / raw_integral;
  for (auto& w : k.w0) w *= k.normalization;
  for (auto& w : k.w1) w *= k.normalization;
  for (auto& w : k.w2) w *= k.normalization;
  detail::match_derivative_moments(k);
  return k;
}

/// g_ε = g * ρ_ε, evaluated as g(x) + Σ w(z) (g(x − z) − g(x)) so that the
/// weight sums only matter up to the moment corrections. Values on `cache`
/// nodes were computed once by discrete convolution; between nodes the cache interpolates. Outside the cached
/// region the same quadrature is evaluated directly at the query point.
/// Derivatives always come from convolving with kernel derivatives.
template <int N>
class MollifiedMetric final : public MetricField<N> {
 public:
  MollifiedMetric(MetricPtr<N> base, std::shared_ptr<const MollifierKernel<N>> kernel,
                  std::shared_ptr<const GridMetric<N>> cache)
      : MetricField<N>(member_name(base->name(), kernel->epsilon), base->signature(),
                       base->domain().shrunk(kernel->epsilon + 1e-12)),
        base_(std::move(base)),
        kernel_(std::move(kernel)),
        cache_(std::move(cache)) {}

  Regularity regularity() const override { return Regularity::GridSampled; }
  int max_order() const override { return 2; }

  double epsilon() const { return kernel_->epsilon; }

  static std::string member_name(const std::string& base, double eps) {
    std::ostringstream os;
    os << base << "*rho[eps=" << eps << "]";
    return os.str();
  }
  const MollifierKernel<N>& kernel() const { return *kernel_; }
  const MetricPtr<N>& base() const { return base_; }
  const GridMetric<N>* cache() const { return cache_.get(); }

  /// Direct quadrature at x, bypassing the cache.
  MetricJet<N> direct(const Vec<N>& x, int order) const {
    MetricJet<N> j;
    j.g.setZero();
    for (auto& m : j.dg) m.setZero();
    for (auto& row : j.d2g)
      for (auto& m : row) m.setZero();
    const auto& k = *kernel_;
    const Mat<N> g0 = base_->g(x);
    j.g = g0;
    for (std::size_t n = 0; n < k.offsets.size(); ++n) {
      const Mat<N> gs = base_->g(x - k.node(n)) - g0;
      j.g += k.w0[n] * gs;
      if (order >= 1)
        for (int a = 0; a < N; ++a) j.dg[a] += k.w1[n][a] * gs;
      if (order >= 2)
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b) j.d2g[a][b] += k.w2[n](a, b) * gs;
    }
    j.order = order;
    return j;
  }

 protected:
  MetricJet<N> evaluate(const Vec<N>& x, int order) const override {
    if (cache_ && cache_->domain().contains(x)) return cache_->jet(x, order);
    return direct(x, order);
  }

 private:
  MetricPtr<N> base_;
  std::shared_ptr<const MollifierKernel<N>> kernel_;
  std::shared_ptr<const GridMetric<N>> cache_;
};

/// Mollifies `metric` and caches g_ε, ∂g_ε, ∂²g_ε on a grid (spacing = kernel
/// spacing, aligned with the region center) covering `region`.
/// OutOfDomain if the region enlarged by ε leaves the metric's chart.
template <int N>
std::shared_ptr<const MollifiedMetric<N>> mollify(const MetricPtr<N>& metric, const MollifierKernel<N>& kernel,
                                                  const Box<N>& region) {
  constexpr int kC = sym_count(N);
  using Grid = GridMetric<N>;
  constexpr int kFields = Grid::fields_for(Grid::Derivatives::UpToSecond);
  const double h = kernel.spacing;
  const int m = kernel.reach;

  GridLayout<N> out;
  const Vec<N> c = region.center();
  std::array<int, N> half;
  for (int a = 0; a < N; ++a) {
    half[a] = static_cast<int>(std::ceil((region.hi[a] - region.lo[a]) / (2 * h) - 1e-9)) + 2;
    out.shape[a] = 2 * half[a] + 1;
    out.origin[a] = c[a] - half[a] * h;
    out.spacing[a] = h;
  }
  GridLayout<N> ext = out;
  for (int a = 0; a < N; ++a) {
    ext.shape[a] += 2 * m;
    ext.origin[a] -= m * h;
  }
  Box<N> ext_box;
  for (int a = 0; a < N; ++a) {
    ext_box.lo[a] = ext.origin[a];
    ext_box.hi[a] = ext.origin[a] + (ext.shape[a] - 1) * h;
  }
  if (!metric->domain().contains_box(ext_box))
    throw Error(ErrorKind::OutOfDomain, "mollification region enlarged by epsilon leaves the chart of " +
                                            metric->name());

  // sample g on the extended grid
  const std::size_t ext_nodes = ext.node_count();
  std::vector<double> samples(ext_nodes * kC);
  parallel_for(ext_nodes, [&](std::size_t f) {
    std::array<int, N> idx;
    std::size_t r = f;
    for (int a = N - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(r % static_cast<std::size_t>(ext.shape[a]));
      r /= static_cast<std::size_t>(ext.shape[a]);
    }
    const Mat<N> g = metric->g(ext.position(idx));
    for (int i = 0; i < N; ++i)
      for (int k = i; k < N; ++k) samples[f * kC + sym_index(N, i, k)] = g(i, k);
  });

  std::array<std::size_t, N> stride;
  stride[N - 1] = 1;
  for (int a = N - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<std::size_t>(ext.shape[a + 1]);
  std::vector<std::size_t> delta(kernel.offsets.size());
  for (std::size_t j = 0; j < kernel.offsets.size(); ++j) {
    std::size_t d = 0;
    for (int a = 0; a < N; ++a) d += static_cast<std::size_t>(m - kernel.offsets[j][a]) * stride[a];
    delta[j] = d;
  }

  std::size_t centre_delta = 0;
  for (int a = 0; a < N; ++a) centre_delta += static_cast<std::size_t>(m) * stride[a];

  const std::size_t out_nodes = out.node_count();
  std::vector<double> data(out_nodes * kFields, 0.0);
  parallel_for(out_nodes, [&](std::size_t f) {
    std::array<int, N> idx;
    std::size_t r = f;
    for (int a = N - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(r % static_cast<std::size_t>(out.shape[a]));
      r /= static_cast<std::size_t>(out.shape[a]);
    }
    std::size_t base = 0;
    for (int a = 0; a < N; ++a) base += static_cast<std::size_t>(idx[a]) * stride[a];
    double* dst = data.data() + f * kFields;
    // differences against the centre sample make constants exact fixed points
    const double* centre = samples.data() + (base + centre_delta) * kC;
    for (int q = 0; q < kC; ++q) dst[q] = centre[q];
    for (std::size_t j = 0; j < delta.size(); ++j) {
      const double* src = samples.data() + (base + delta[j]) * kC;
      const double w0 = kernel.w0[j];
      const Vec<N>& w1 = kernel.w1[j];
      const Mat<N>& w2 = kernel.w2[j];
      for (int q = 0; q < kC; ++q) {
        const double s = src[q] - centre[q];
        dst[q] += w0 * s;
        for (int a = 0; a < N; ++a) dst[kC * (1 + a) + q] += w1[a] * s;
        for (int a = 0; a < N; ++a)
          for (int b = a; b < N; ++b) dst[kC * (1 + N + sym_index(N, a, b)) + q] += w2(a, b) * s;
      }
    }
  });

  auto cache = std::make_shared<const Grid>(metric->name() + "*rho_eps(cache)", metric->signature(), out,
                                            Grid::Derivatives::UpToSecond, std::move(data));
  return std::make_shared<const MollifiedMetric<N>>(
      metric, std::make_shared<const MollifierKernel<N>>(kernel), std::move(cache));
}

/// The net g_ε for a geometric schedule ε_j = ε_start·2^{−j}, ε descending.
template <int N>
struct MollifiedFamily {
  MetricPtr<N> base;
  Box<N> region;
  double resolution = 0.0;  // ε / grid spacing
  std::vector<std::shared_ptr<const MollifiedMetric<N>>> members;

  std::vector<double> epsilons() const {
    std::vector<double> e;
    for (const auto& m : members) e.push_back(m->epsilon());
    return e;
  }
};

template <int N>
MollifiedFamily<N> build_family(const MetricPtr<N>& base, const Box<N>& region, double eps_start, int levels,
                                double resolution, const KernelProfile<N>& profile = bump_profile<N>()) {
  if (levels < 1) throw Error(ErrorKind::InvalidArgument, "family needs at least one level");
  if (resolution < 4.0) throw Error(ErrorKind::UnderResolved, "kernel resolution must be at least 4");
  MollifiedFamily<N> fam;
  fam.base = base;
  fam.region = region;
  fam.resolution = resolution;
  for (int j = 0; j < levels; ++j) {
    const double eps = eps_start * std::ldexp(1.0, -j);
    fam.members.push_back(mollify<N>(base, build_kernel<N>(eps, eps / resolution, profile), region));
  }
  return fam;
}

struct ConvergenceRow {
  double epsilon = 0.0;
  double sup_c0 = 0.0;  // max |g_ε − g|
  double sup_c1 = 0.0;  // max |∂g_ε − ∂g|
  double sup_d2 = 0.0;  // max |∂²g_ε|
  bool signature_ok = true;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // ε descending
  bool c1_monotone = true;
  bool d2_growth_violation = false;  // sup|∂²g_ε| grew by > 10% as ε halved
  double uniform_d2 = 0.0;           // max over ε of sup|∂²g_ε|

  void write_csv(std::ostream& os) const {
    os << "epsilon,sup_c0,sup_c1,sup_d2\n";
    os.precision(17);
    for (const auto& r : rows) os << r.epsilon << ',' << r.sup_c0 << ',' << r.sup_c1 << ',' << r.sup_d2 << '\n';
  }
};

/// Probes `compact_set` on a grid with `probe_points` nodes per axis.
template <int N>
ConvergenceReport convergence_report(const MollifiedFamily<N>& family, const Box<N>& compact_set,
                                     int probe_points) {
  if (probe_points < 2) throw Error(ErrorKind::InvalidArgument, "probe grid needs at least 2 points per axis");
  std::vector<Vec<N>> probes;
  std::array<int, N> idx{};
  for (;;) {
    Vec<N> x;
    for (int a = 0; a < N; ++a)
      x[a] = compact_set.lo[a] + (compact_set.hi[a] - compact_set.lo[a]) * idx[a] / (probe_points - 1);
    probes.push_back(x);
    int a = 0;
    while (a < N && ++idx[a] >= probe_points) idx[a++] = 0;
    if (a == N) break;
  }
  const Signature sig = family.base->signature();
  ConvergenceReport rep;
  for (const auto& member : family.members) {
    ConvergenceRow row;
    row.epsilon = member->epsilon();
    for (const auto& x : probes) {
      const MetricJet<N> base = family.base->jet(x, 1);
      const MetricJet<N> mol = member->jet(x, 2);
      row.sup_c0 = std::max(row.sup_c0, (mol.g - base.g).cwiseAbs().maxCoeff());
      for (int a = 0; a < N; ++a) {
        row.sup_c1 = std::max(row.sup_c1, (mol.dg[a] - base.dg[a]).cwiseAbs().maxCoeff());
        for (int b = 0; b < N; ++b) row.sup_d2 = std::max(row.sup_d2, mol.d2g[a][b].cwiseAbs().maxCoeff());
      }
      try {
        if (!(signature_of<N>(mol.g) == sig)) row.signature_ok = false;
      } catch (const Error&) {
        row.signature_ok = false;
      }
    }
    rep.rows.push_back(row);
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].sup_c1 > rep.rows[i - 1].sup_c1 * (1 + 1e-9) + 1e-14) rep.c1_monotone = false;
    if (rep.rows[i].sup_d2 > 1.1 * rep.rows[i - 1].sup_d2 + 1e-12) rep.d2_growth_violation = true;
  }
  for (const auto& r : rep.rows) rep.uniform_d2 = std::max(rep.uniform_d2, r.sup_d2);
  return rep;
}

}  // namespace lipexp
