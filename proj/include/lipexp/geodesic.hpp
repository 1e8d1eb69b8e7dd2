#pragma once

#include <limits>
#include <vector>

#include "lipexp/curvature.hpp"

namespace lipexp {

/// Fixed-step RK4 settings. With step == 0 the parameter step is chosen so
/// that each step covers at most clearance(p)/2000 of Euclidean arc length.
struct IntegratorSettings {
  double step = 0.0;
  double arc_fraction = 1.0 / 2000.0;
  int min_steps = 8;
  int max_steps = 4'000'000;
  double residual_tol = 1e-5;     // per-step Hermite residual, relative to h‖y‖
  bool self_convergence = true;   // rerun at h/2 and record the endpoint change
  double convergence_tol = 1e-6;  // absolute, scaled by (1 + path length)

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "rk4 fixed-step; step=" << (step > 0 ? std::to_string(step) : "auto(clearance*" + std::to_string(arc_fraction) + ")")
       << "; min_steps=" << min_steps << "; residual_tol=" << residual_tol
       << "; self_convergence=" << (self_convergence ? "halving" : "off");
    return os.str();
  }
};

template <int N>
struct PhaseState {
  double t = 0.0;
  Vec<N> c = Vec<N>::Zero();
  Vec<N> y = Vec<N>::Zero();
  Vec<N> a = Vec<N>::Zero();  // dy/dt = −Γ(c)(y, y), kept for Hermite interpolation of y
};

template <int N>
struct GeodesicPath {
  Vec<N> p, v;
  double step = 0.0;
  std::vector<PhaseState<N>> samples;
  double error_estimate = 0.0;  // endpoint change under step halving (0 if not run)
  double velocity_error = 0.0;  // same for the final velocity
  double max_residual = 0.0;

  const PhaseState<N>& final() const { return samples.back(); }
  double t_max() const { return samples.back().t; }

  /// Cubic Hermite interpolation of c (from c, y) and y (from y, a).
  PhaseState<N> at(double t) const {
    if (samples.size() == 1) return samples.front();
    std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(t / step), 0.0, double(samples.size() - 2)));
    const auto& s0 = samples[i];
    const auto& s1 = samples[i + 1];
    const double h = s1.t - s0.t;
    const double u = (t - s0.t) / h;
    const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
    PhaseState<N> out;
    out.t = t;
    out.c = h00 * s0.c + h10 * h * s0.y + h01 * s1.c + h11 * h * s1.y;
    out.y = h00 * s0.y + h10 * h * s0.a + h01 * s1.y + h11 * h * s1.a;
    out.a = (1 - u) * s0.a + u * s1.a;
    return out;
  }
};

namespace detail {

template <int N>
Vec<N> geodesic_accel(const MetricField<N>& metric, const Vec<N>& c, const Vec<N>& y) {
  return -contract<N>(christoffel(metric, c), y, y);
}

template <int N>
int step_count(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v, double t_max,
               const IntegratorSettings& s) {
  double n;
  if (s.step > 0) {
    n = std::ceil(t_max / s.step - 1e-9);
  } else {
    const double clearance = metric.domain().clearance(p);
    const double arc = std::max(clearance, 1e-300) * s.arc_fraction;
    n = std::ceil(v.norm() * t_max / arc);
  }
  n = std::max<double>(n, s.min_steps);
  if (n > s.max_steps) throw Error(ErrorKind::StepTooLarge, "geodesic would need more than max_steps steps");
  int k = static_cast<int>(n);
  return k + (k % 2);  // even, so the Jacobi solver can form a coarse half-resolution run
}

template <int N>
GeodesicPath<N> rk4_geodesic(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v, double t_max,
                             int n, double residual_tol) {
  const auto& dom = metric.domain();
  if (!dom.contains(p)) throw Error(ErrorKind::OutOfDomain, "geodesic start point outside chart");
  GeodesicPath<N> path;
  path.p = p;
  path.v = v;
  path.step = t_max / n;
  path.samples.reserve(static_cast<std::size_t>(n) + 1);
  const double h = path.step;
  PhaseState<N> s;
  s.c = p;
  s.y = v;
  s.a = geodesic_accel(metric, p, v);
  path.samples.push_back(s);
  auto left = [&](double t) {
    return Error(ErrorKind::LeftDomain, "geodesic left the chart at t=" + std::to_string(t), t);
  };
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    const Vec<N> k1c = s.y, k1y = s.a;
    Vec<N> c2 = s.c + 0.5 * h * k1c, y2 = s.y + 0.5 * h * k1y;
    if (!dom.contains(c2)) throw left(t);
    const Vec<N> k2c = y2, k2y = geodesic_accel(metric, c2, y2);
    Vec<N> c3 = s.c + 0.5 * h * k2c, y3 = s.y + 0.5 * h * k2y;
    if (!dom.contains(c3)) throw left(t);
    const Vec<N> k3c = y3, k3y = geodesic_accel(metric, c3, y3);
    Vec<N> c4 = s.c + h * k3c, y4 = s.y + h * k3y;
    if (!dom.contains(c4)) throw left(t);
    const Vec<N> k4c = y4, k4y = geodesic_accel(metric, c4, y4);
    PhaseState<N> nx;
    nx.t = (i + 1 == n) ? t_max : t + h;
    nx.c = s.c + h / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
    nx.y = s.y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    if (!nx.c.allFinite() || !nx.y.allFinite()) throw Error(ErrorKind::StepTooLarge, "non-finite geodesic state");
    if (!dom.contains(nx.c)) throw left(t);
    nx.a = geodesic_accel(metric, nx.c, nx.y);
    // Hermite-quadrature residual of c' = y over the step
    const Vec<N> res = nx.c - s.c - 0.5 * h * (s.y + nx.y) - h * h / 12.0 * (s.a - nx.a);
    const double scale = h * std::max(s.y.norm(), nx.y.norm());
    const double rel = scale > 0 ? res.norm() / scale : 0.0;
    path.max_residual = std::max(path.max_residual, rel);
    if (rel > residual_tol) throw Error(ErrorKind::StepTooLarge, "geodesic step residual above tolerance");
    path.samples.push_back(nx);
    s = nx;
  }
  return path;
}

}  // namespace detail

/// Integrates c' = y, y' = −Γ(c)(y, y) on [0, t_max] with RK4.
/// LeftDomain (with exit time) when the path leaves the chart; StepTooLarge if
/// a step residual or the halving self-convergence check fails.
template <int N>
GeodesicPath<N> integrate_geodesic(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v, double t_max,
                                   const IntegratorSettings& settings = {}) {
  if (!(t_max > 0)) throw Error(ErrorKind::InvalidArgument, "t_max must be positive");
  const int n = detail::step_count(metric, p, v, t_max, settings);
  GeodesicPath<N> path = detail::rk4_geodesic(metric, p, v, t_max, n, settings.residual_tol);
  if (settings.self_convergence) {
    const GeodesicPath<N> fine = detail::rk4_geodesic(metric, p, v, t_max, 2 * n, settings.residual_tol);
    path.error_estimate = (fine.final().c - path.final().c).norm();
    path.velocity_error = (fine.final().y - path.final().y).norm();
    const double tol = settings.convergence_tol * (1.0 + v.norm() * t_max);
    if (path.error_estimate > tol)
      throw Error(ErrorKind::StepTooLarge, "endpoint changed by " + std::to_string(path.error_estimate) +
                                               " under step halving");
  }
  return path;
}

/// exp_p(v) = c(1). OutsideCommonDomain when ‖v‖_E ≥ mu.
template <int N>
Vec<N> exp_map(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v,
               double mu = std::numeric_limits<double>::infinity(), const IntegratorSettings& settings = {},
               double* error_estimate = nullptr) {
  if (!(v.norm() < mu)) throw Error(ErrorKind::OutsideCommonDomain, "tangent vector outside the common domain");
  if (v.isZero(0.0)) {
    if (error_estimate) *error_estimate = 0.0;
    return p;
  }
  const GeodesicPath<N> path = integrate_geodesic(metric, p, v, 1.0, settings);
  if (error_estimate) *error_estimate = path.error_estimate;
  return path.final().c;
}

template <int N>
struct JacobiSample {
  double s = 0.0;
  Vec<N> J = Vec<N>::Zero();
  Vec<N> D = Vec<N>::Zero();  // ∇_{γ'} J
  Vec<N> dJ = Vec<N>::Zero(), dD = Vec<N>::Zero();
};

template <int N>
struct JacobiSolution {
  GeodesicPath<N> path;
  Vec<N> J0, dJ0;
  std::vector<JacobiSample<N>> samples;
  double error_estimate = 0.0;  // ‖J_h − J_2h‖ + ‖D_h − D_2h‖ maximised over shared nodes

  const JacobiSample<N>& final() const { return samples.back(); }

  JacobiSample<N> at(double s) const {
    const double h = path.step;
    std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(s / h), 0.0, double(samples.size() - 2)));
    const auto& a = samples[i];
    const auto& b = samples[i + 1];
    const double hh = b.s - a.s, u = (s - a.s) / hh;
    const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
    JacobiSample<N> out;
    out.s = s;
    out.J = h00 * a.J + h10 * hh * a.dJ + h01 * b.J + h11 * hh * b.dJ;
    out.D = h00 * a.D + h10 * hh * a.dD + h01 * b.D + h11 * hh * b.dD;
    out.dJ = (1 - u) * a.dJ + u * b.dJ;
    out.dD = (1 - u) * a.dD + u * b.dD;
    return out;
  }
};

namespace detail {

// dJ = D − Γ(y, J),  dD = −R(J, y)y − Γ(y, D)
template <int N>
void jacobi_rhs(const MetricField<N>& metric, const Vec<N>& c, const Vec<N>& y, const Vec<N>& J, const Vec<N>& D,
                Vec<N>& dJ, Vec<N>& dD) {
  const Connection<N> conn = connection(metric.jet(c, 2));
  const Riemann<N> R = riemann(conn);
  dJ = D - contract<N>(conn.gamma, y, J);
  dD = -R.apply(J, y, y) - contract<N>(conn.gamma, y, D);
}

// RK4 over path nodes with stride `stride` (1 or 2); stage midpoints come from
// the node in between (stride 2) or from Hermite interpolation (stride 1).
template <int N>
std::vector<JacobiSample<N>> jacobi_rk4(const MetricField<N>& metric, const GeodesicPath<N>& path, const Vec<N>& J0,
                                        const Vec<N>& D0, int stride) {
  std::vector<JacobiSample<N>> out;
  const std::size_t last = path.samples.size() - 1;
  JacobiSample<N> cur;
  cur.J = J0;
  cur.D = D0;
  const auto& s0 = path.samples[0];
  jacobi_rhs(metric, s0.c, s0.y, cur.J, cur.D, cur.dJ, cur.dD);
  out.push_back(cur);
  for (std::size_t i = 0; i + stride <= last; i += stride) {
    const auto& a = path.samples[i];
    const auto& b = path.samples[i + stride];
    const double h = b.t - a.t;
    const PhaseState<N> m = stride == 2 ? path.samples[i + 1] : path.at(0.5 * (a.t + b.t));
    Vec<N> k1J = cur.dJ, k1D = cur.dD, k2J, k2D, k3J, k3D, k4J, k4D;
    jacobi_rhs(metric, m.c, m.y, Vec<N>(cur.J + 0.5 * h * k1J), Vec<N>(cur.D + 0.5 * h * k1D), k2J, k2D);
    jacobi_rhs(metric, m.c, m.y, Vec<N>(cur.J + 0.5 * h * k2J), Vec<N>(cur.D + 0.5 * h * k2D), k3J, k3D);
    jacobi_rhs(metric, b.c, b.y, Vec<N>(cur.J + h * k3J), Vec<N>(cur.D + h * k3D), k4J, k4D);
    JacobiSample<N> nx;
    nx.s = b.t;
    nx.J = cur.J + h / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
    nx.D = cur.D + h / 6.0 * (k1D + 2 * k2D + 2 * k3D + k4D);
    if (!nx.J.allFinite() || !nx.D.allFinite()) throw Error(ErrorKind::StepTooLarge, "non-finite Jacobi state");
    jacobi_rhs(metric, b.c, b.y, nx.J, nx.D, nx.dJ, nx.dD);
    out.push_back(nx);
    cur = nx;
  }
  return out;
}

}  // namespace detail

/// Solves the Jacobi equation ∇∇J = −R(J, γ')γ' along `path` in first-order
/// form (J, ∇J), reusing the stored geodesic samples.
template <int N>
JacobiSolution<N> jacobi_field(const MetricField<N>& metric, const GeodesicPath<N>& path, const Vec<N>& J0,
                               const Vec<N>& dJ0) {
  if (!metric.has_curvature())
    throw Error(ErrorKind::InsufficientRegularity, metric.name() + ": Jacobi fields need curvature (mollify first)");
  JacobiSolution<N> sol;
  sol.path = path;
  sol.J0 = J0;
  sol.dJ0 = dJ0;
  sol.samples = detail::jacobi_rk4(metric, path, J0, dJ0, 1);
  if ((path.samples.size() - 1) % 2 == 0 && path.samples.size() >= 3) {
    const auto coarse = detail::jacobi_rk4(metric, path, J0, dJ0, 2);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      const auto& f = sol.samples[2 * i];
      sol.error_estimate =
          std::max(sol.error_estimate, (f.J - coarse[i].J).norm() + (f.D - coarse[i].D).norm());
    }
  }
  return sol;
}

/// T_v exp_p(w) = J(1) along γ(t) = exp_p(tv), J(0) = 0, ∇J(0) = w.
template <int N>
Vec<N> d_exp(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v, const Vec<N>& w,
             double mu = std::numeric_limits<double>::infinity(), const IntegratorSettings& settings = {},
             double* error_estimate = nullptr) {
  if (!(v.norm() < mu)) throw Error(ErrorKind::OutsideCommonDomain, "tangent vector outside the common domain");
  const GeodesicPath<N> path = integrate_geodesic(metric, p, v, 1.0, settings);
  const JacobiSolution<N> sol = jacobi_field(metric, path, Vec<N>::Zero().eval(), w);
  if (error_estimate) *error_estimate = sol.error_estimate + path.error_estimate;
  return sol.final().J;
}

/// Matrix of T_v exp_p in chart coordinates (column i = T_v exp_p(e_i)).
template <int N>
Mat<N> d_exp_matrix(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v,
                    double mu = std::numeric_limits<double>::infinity(), const IntegratorSettings& settings = {},
                    double* error_estimate = nullptr) {
  if (!(v.norm() < mu)) throw Error(ErrorKind::OutsideCommonDomain, "tangent vector outside the common domain");
  const GeodesicPath<N> path = integrate_geodesic(metric, p, v, 1.0, settings);
  Mat<N> A;
  double err = path.error_estimate;
  for (int i = 0; i < N; ++i) {
    const JacobiSolution<N> sol = jacobi_field(metric, path, Vec<N>::Zero().eval(), Vec<N>::Unit(i).eval());
    A.col(i) = sol.final().J;
    err = std::max(err, sol.error_estimate);
  }
  if (error_estimate) *error_estimate = err;
  return A;
}

/// (λ_min, λ_max) of (exp_p)^* g_E relative to g_E at v: eigenvalues of AᵀA.
template <int N>
std::pair<double, double> pullback_ratio(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& v,
                                         double mu = std::numeric_limits<double>::infinity(),
                                         const IntegratorSettings& settings = {}, double* error_estimate = nullptr) {
  const Mat<N> A = d_exp_matrix(metric, p, v, mu, settings, error_estimate);
  Eigen::SelfAdjointEigenSolver<Mat<N>> es(A.transpose() * A, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

/// ⟨y, y⟩_g at a phase state; conserved along exact geodesics.
template <int N>
double energy(const MetricField<N>& metric, const PhaseState<N>& s) {
  return s.y.dot(metric.g(s.c) * s.y);
}

}  // namespace lipexp
