#pragma once

#include <algorithm>
#include <vector>

#include "lipexp/metric_field.hpp"

namespace lipexp {

/// Γ and, when requested, its first derivatives ∂_m Γ^k_ij = dgamma[m][k](i, j).
template <int N>
struct Connection {
  Christoffel<N> gamma{};
  std::array<Christoffel<N>, N> dgamma{};
  bool has_derivative = false;
};

namespace detail {

template <int N>
Mat<N> checked_inverse(const Mat<N>& g) {
  const double scale = g.cwiseAbs().maxCoeff();
  const double det = g.determinant();
  if (!(std::abs(det) > 1e-14 * std::pow(scale, N)))
    throw Error(ErrorKind::SingularMetric, "metric determinant below floor");
  return g.inverse();
}

// Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
template <int N>
Christoffel<N> first_kind(const std::array<Mat<N>, N>& dg) {
  Christoffel<N> out;
  for (int l = 0; l < N; ++l)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) out[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  return out;
}

template <int N>
Christoffel<N> raise(const Mat<N>& ginv, const Christoffel<N>& lower) {
  Christoffel<N> out;
  for (int k = 0; k < N; ++k) {
    out[k].setZero();
    for (int l = 0; l < N; ++l) out[k] += ginv(k, l) * lower[l];
  }
  return out;
}

}  // namespace detail

/// Christoffel symbols from a jet of order ≥ 1.
template <int N>
Christoffel<N> christoffel(const MetricJet<N>& jet) {
  return detail::raise<N>(detail::checked_inverse(jet.g), detail::first_kind<N>(jet.dg));
}

template <int N>
Christoffel<N> christoffel(const MetricField<N>& metric, const Vec<N>& x) {
  return christoffel(metric.jet(x, 1));
}

/// Γ and ∂Γ from a jet of order 2.
template <int N>
Connection<N> connection(const MetricJet<N>& jet) {
  Connection<N> c;
  const Mat<N> ginv = detail::checked_inverse(jet.g);
  const Christoffel<N> lower = detail::first_kind<N>(jet.dg);
  c.gamma = detail::raise<N>(ginv, lower);
  if (jet.order < 2) return c;
  for (int m = 0; m < N; ++m) {
    // ∂_m g⁻¹ = −g⁻¹ (∂_m g) g⁻¹
    const Mat<N> dginv = -ginv * jet.dg[m] * ginv;
    Christoffel<N> dlower;
    for (int l = 0; l < N; ++l)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          dlower[l](i, j) = 0.5 * (jet.d2g[m][i](j, l) + jet.d2g[m][j](i, l) - jet.d2g[m][l](i, j));
    const Christoffel<N> a = detail::raise<N>(dginv, lower);
    const Christoffel<N> b = detail::raise<N>(ginv, dlower);
    for (int k = 0; k < N; ++k) c.dgamma[m][k] = a[k] + b[k];
  }
  c.has_derivative = true;
  return c;
}

/// R^l_{kij} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}.
template <int N>
Riemann<N> riemann(const Connection<N>& c) {
  if (!c.has_derivative)
    throw Error(ErrorKind::InsufficientRegularity, "curvature needs second metric derivatives");
  Riemann<N> r;
  const auto& G = c.gamma;
  const auto& dG = c.dgamma;
  for (int l = 0; l < N; ++l)
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          double v = dG[i][l](j, k) - dG[j][l](i, k);
          for (int m = 0; m < N; ++m) v += G[l](i, m) * G[m](j, k) - G[l](j, m) * G[m](i, k);
          r(l, k, i, j) = v;
        }
  return r;
}

template <int N>
Riemann<N> riemann_curvature(const MetricField<N>& metric, const Vec<N>& x) {
  return riemann(connection(metric.jet(x, 2)));
}

/// K(u, v) = ⟨R(u,v)v, u⟩ / (⟨u,u⟩⟨v,v⟩ − ⟨u,v⟩²). Throws DegeneratePlane
/// when the Gram determinant is below `floor_rel` × ‖u‖²‖v‖² (Euclidean).
template <int N>
double sectional_curvature(const MetricField<N>& metric, const Vec<N>& x, const Vec<N>& u,
                           const Vec<N>& v, double floor_rel = 1e-10) {
  const MetricJet<N> jet = metric.jet(x, 2);
  const Riemann<N> r = riemann(connection(jet));
  const Mat<N>& g = jet.g;
  const double uu = u.dot(g * u), vv = v.dot(g * v), uv = u.dot(g * v);
  const double gram = uu * vv - uv * uv;
  if (!(std::abs(gram) > floor_rel * u.squaredNorm() * v.squaredNorm()))
    throw Error(ErrorKind::DegeneratePlane, "2-plane is degenerate for the metric");
  return u.dot(g * r.apply(u, v, v)) / gram;
}

/// Sup-norm bounds over a Euclidean ball, plus the common-domain data filled
/// in later by the certificate chain.
template <int N>
struct CurvatureBounds {
  double K1 = 0.0;  // sup ‖R‖_E
  double K2 = 0.0;  // sup ‖Γ‖_E
  double mu = 0.0;
  double epsilon0 = 0.0;
  Vec<N> center = Vec<N>::Zero();
  double radius = 0.0;
  // diagnostics
  double grid_spacing = 0.0;
  double max_R = 0.0, max_gamma = 0.0;
  double slope_R = 0.0, slope_gamma = 0.0;
  std::size_t samples = 0;
};

struct SupBoundsOptions {
  double safety = 1.05;
  bool curvature = true;  // false: K2 only (raw C^{1,1} metrics)
};

/// Grid points center + h·i (i ∈ ℤᴺ) inside the closed ball. Nested balls with
/// the same center and spacing give nested point sets.
template <int N>
std::vector<Vec<N>> ball_grid(const Vec<N>& center, double radius, double spacing) {
  std::vector<Vec<N>> pts;
  const int m = static_cast<int>(std::floor(radius / spacing + 1e-12));
  std::array<int, N> idx;
  idx.fill(-m);
  for (;;) {
    Vec<N> off;
    for (int a = 0; a < N; ++a) off[a] = idx[a] * spacing;
    if (off.norm() <= radius * (1 + 1e-12)) pts.push_back(center + off);
    int a = 0;
    while (a < N && ++idx[a] > m) idx[a++] = -m;
    if (a == N) break;
  }
  return pts;
}

namespace detail {

// 4th-order central difference of a scalar function along each axis.
template <int N, class F>
double gradient_norm_fd(F&& f, const Vec<N>& x, double h) {
  Vec<N> grad;
  for (int a = 0; a < N; ++a) {
    Vec<N> e = Vec<N>::Zero();
    e[a] = h;
    grad[a] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h);
  }
  return grad.norm();
}

}  // namespace detail

/// K1 = sup ‖R‖_E and K2 = sup ‖Γ‖_E over the ball, from grid maxima with
/// spacing `grid_resolution`, reported as safety × max + slack where
/// slack = (h√N/2) × (largest sampled gradient of the norm). Gradients use a
/// 4th-order central stencil with step h/4.
template <int N>
CurvatureBounds<N> sup_bounds(const MetricField<N>& metric, const Vec<N>& center, double radius,
                              double grid_resolution, const SupBoundsOptions& opt = {}) {
  if (!(radius > 0) || !(grid_resolution > 0))
    throw Error(ErrorKind::InvalidArgument, "sup_bounds: radius and resolution must be positive");
  const double fd_step = grid_resolution / 4.0;
  if (!metric.domain().contains_ball(center, radius + 2 * fd_step))
    throw Error(ErrorKind::OutOfDomain, "sup_bounds ball leaves the chart domain");
  if (opt.curvature && !metric.has_curvature())
    throw Error(ErrorKind::InsufficientRegularity, metric.name() + ": no curvature access");

  auto gamma_norm = [&](const Vec<N>& x) { return euclidean_norm<N>(christoffel(metric, x)); };
  auto r_norm = [&](const Vec<N>& x) { return euclidean_norm<N>(riemann_curvature(metric, x)); };

  CurvatureBounds<N> b;
  b.center = center;
  b.radius = radius;
  b.grid_spacing = grid_resolution;
  const auto pts = ball_grid<N>(center, radius, grid_resolution);
  b.samples = pts.size();
  for (const auto& x : pts) {
    b.max_gamma = std::max(b.max_gamma, gamma_norm(x));
    b.slope_gamma = std::max(b.slope_gamma, detail::gradient_norm_fd<N>(gamma_norm, x, fd_step));
    if (opt.curvature) {
      b.max_R = std::max(b.max_R, r_norm(x));
      b.slope_R = std::max(b.slope_R, detail::gradient_norm_fd<N>(r_norm, x, fd_step));
    }
  }
  const double reach = grid_resolution * std::sqrt(static_cast<double>(N)) / 2.0;
  b.K2 = opt.safety * b.max_gamma + reach * b.slope_gamma;
  b.K1 = opt.curvature ? opt.safety * b.max_R + reach * b.slope_R : 0.0;
  return b;
}

}  // namespace lipexp
