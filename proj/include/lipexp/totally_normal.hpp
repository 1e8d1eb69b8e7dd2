#pragma once

#include <string>
#include <vector>

#include "lipexp/verifier.hpp"

namespace lipexp {

/// N(q) = Σ (x^i)² with x = q − p (the chart translated so that p sits at 0).
template <int N>
double n_function(const Vec<N>& p, const Vec<N>& q) {
  return (q - p).squaredNorm();
}

/// B_ij(q) = δ_ij − Σ_k Γ^k_ij(q) x^k, x = q − p.
template <int N>
Mat<N> b_tensor(const MetricField<N>& metric, const Vec<N>& p, const Vec<N>& q) {
  const Christoffel<N> G = christoffel(metric, q);
  const Vec<N> x = q - p;
  Mat<N> B = Mat<N>::Identity();
  for (int k = 0; k < N; ++k) B -= x[k] * G[k];
  return B;
}

template <int N>
double min_eigenvalue(const Mat<N>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<N>> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct PositivityOptions {
  double search_max = 1.0;  // largest δ' considered
  int resolution = 24;      // grid points per radius
  double floor = 0.1;       // required λ_min(B)
  double safety = 0.9;
};

/// Largest sampled δ' with λ_min(B) ≥ floor on {N < δ'}: δ' is `safety` times
/// the smallest N among grid points that fail, or search_max if none fail.
/// The search ball is clipped to the chart.
template <int N>
double positivity_radius(const MetricField<N>& metric, const Vec<N>& p, const PositivityOptions& opt = {}) {
  const double clearance = metric.domain().clearance(p);
  const double rad = std::min(std::sqrt(opt.search_max), clearance * (1 - 1e-9));
  if (!(rad > 0)) return 0.0;
  const auto pts = ball_grid<N>(p, rad, rad / opt.resolution);
  std::vector<double> fail(pts.size(), std::numeric_limits<double>::infinity());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      if (min_eigenvalue<N>(b_tensor(metric, p, pts[i])) < opt.floor) fail[i] = n_function(p, pts[i]);
    } catch (const Error&) {
      fail[i] = n_function(p, pts[i]);
    }
  });
  const double first = *std::min_element(fail.begin(), fail.end());
  if (!std::isfinite(first)) return rad * rad;
  return opt.safety * first;
}

template <int N>
struct SweepPoint {
  Vec<N> q;
  double r7 = 0, c3 = 0, c4 = 0, mu = 0;
};

/// V(δ) = {N < δ} around p together with the data that licenses it.
template <int N>
struct ConvexityDomain {
  Vec<N> p = Vec<N>::Zero();
  double delta = 0.0;
  double delta_prime = 0.0;    // B positivity bound
  double sweep_radius = 0.0;   // V' = B_E(p, sweep_radius)
  double uniform_r = std::numeric_limits<double>::infinity();  // min r7 over the sweep
  double inner_radius = std::numeric_limits<double>::infinity();  // min c4·r: exp_q(B(0,r)) ⊇ B_E(q, inner_radius)
  std::vector<SweepPoint<N>> sweep;
  int search_steps = 0;
  std::vector<std::string> notes;

  std::string w_descriptor() const {
    std::ostringstream os;
    os.precision(17);
    os << "W = E(S), S = {v in T_qM : |q - p|_E < " << sweep_radius << ", |v|_E < " << uniform_r
       << "}, E(v) = (q, exp_q(v)); contains {(q, q~) : |q - q~|_E < " << inner_radius << "}";
    return os.str();
  }
};

struct FindDeltaOptions {
  double sweep_radius = 0.05;
  double factor = 0.8;
  int max_steps = 20000;
  PositivityOptions positivity{};
};

/// Base points p, p ± s e_a and p + s(±1, …, ±1)/√N for a sweep radius s.
template <int N>
std::vector<Vec<N>> sweep_points(const Vec<N>& p, double s) {
  std::vector<Vec<N>> out{p};
  for (int a = 0; a < N; ++a) {
    out.push_back(p + s * Vec<N>::Unit(a));
    out.push_back(p - s * Vec<N>::Unit(a));
  }
  for (int mask = 0; mask < (1 << N); ++mask) {
    Vec<N> d;
    for (int a = 0; a < N; ++a) d[a] = (mask >> a) & 1 ? 1.0 : -1.0;
    out.push_back(p + s / std::sqrt(double(N)) * d);
  }
  return out;
}

/// Certifies every sweep point, takes the uniform radius r = min r7 and
/// searches δ geometrically downward from δ' until V(δ) × V(δ) ⊆ W, i.e.
/// 2√δ ≤ min c4·r and √δ ≤ sweep radius.
template <int N>
ConvexityDomain<N> find_delta(const MetricPtr<N>& metric, const Vec<N>& p, const CertificateConfig& cfg,
                              const FindDeltaOptions& opt = {}) {
  ConvexityDomain<N> dom;
  dom.p = p;
  dom.sweep_radius = opt.sweep_radius;
  const auto pts = sweep_points<N>(p, opt.sweep_radius);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    try {
      const auto run = full_certificate<N>(metric, pts[i], cfg);
      dom.sweep.push_back({pts[i], run.cert.r7, run.cert.c3, run.cert.c4, run.cert.mu});
    } catch (const Error& e) {
      std::ostringstream os;
      os << "certificate failed at sweep point " << i << " [" << pts[i].transpose() << "]: " << e.what();
      throw Error(ErrorKind::NoUniformRadius, os.str());
    }
  }
  for (const auto& s : dom.sweep) dom.uniform_r = std::min(dom.uniform_r, s.r7);
  for (const auto& s : dom.sweep) dom.inner_radius = std::min(dom.inner_radius, s.c4 * dom.uniform_r);
  dom.delta_prime = positivity_radius<N>(*metric, p, opt.positivity);

  auto admissible = [&](double d) {
    return 2 * std::sqrt(d) <= dom.inner_radius && std::sqrt(d) <= dom.sweep_radius && d <= dom.delta_prime;
  };
  double d = dom.delta_prime;
  int steps = 0;
  while (!admissible(d) && steps < opt.max_steps) {
    d *= opt.factor;
    ++steps;
  }
  if (!admissible(d) || !(d > 0)) throw Error(ErrorKind::NoUniformRadius, "no admissible delta found");
  dom.delta = d;
  dom.search_steps = steps;
  dom.notes.push_back("delta searched geometrically from delta' with factor " + std::to_string(opt.factor));
  return dom;
}

struct ShootingOptions {
  int max_iterations = 60;
  double tolerance = 1e-10;  // relative to |q~ − q|
  IntegratorSettings integrator{};
};

/// Solves exp_q(v) = target by damped corrections v ← v + λ A⁻¹ (target − exp_q(v)),
/// A = T_v exp_q (identity when the metric has no curvature), halving λ until
/// the residual decreases. ShootingFailed when it does not converge.
template <int N>
Vec<N> shoot(const MetricField<N>& metric, const Vec<N>& q, const Vec<N>& target, const ShootingOptions& opt = {}) {
  const double scale = (target - q).norm();
  if (scale == 0) return Vec<N>::Zero();
  const double tol = opt.tolerance * scale + detail::roundoff_floor(q.norm());
  Vec<N> v = target - q;
  auto residual = [&](const Vec<N>& w) -> Vec<N> {
    return target - exp_map(metric, q, w, std::numeric_limits<double>::infinity(), opt.integrator);
  };
  Vec<N> r = residual(v);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (r.norm() <= tol) return v;
    Vec<N> step = r;
    if (metric.has_curvature()) {
      const Mat<N> A = d_exp_matrix(metric, q, v, std::numeric_limits<double>::infinity(), opt.integrator);
      step = A.fullPivLu().solve(r);
      if (!step.allFinite()) step = r;
    }
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      const Vec<N> cand = v + lambda * step;
      try {
        const Vec<N> rc = residual(cand);
        if (rc.norm() < r.norm()) {
          v = cand;
          r = rc;
          improved = true;
          break;
        }
      } catch (const Error&) {
      }
    }
    if (!improved) break;
  }
  if (r.norm() <= tol) return v;
  throw Error(ErrorKind::ShootingFailed, "geodesic shooting did not converge");
}

struct ConvexityOptions {
  int path_steps = 128;
  double identity_tolerance = 1e-4;  // |FD − 2B(σ',σ')| / (2|σ'|²)
  ShootingOptions shooting{};
};

/// For n random pairs in V(δ): shoot σ from q to q̃, then require σ ⊆ V(δ),
/// 2B(σ',σ') > 0 along σ, |v| < uniform r, and the second difference of N∘σ
/// matching 2B(σ',σ').
template <int N>
VerificationReport verify_convexity(const MetricField<N>& metric, const ConvexityDomain<N>& dom, std::size_t n,
                                    std::uint64_t seed, const ConvexityOptions& opt = {}) {
  const double rad = std::sqrt(dom.delta);
  std::vector<double> identity_err(n, 0.0);
  IntegratorSettings path_settings = opt.shooting.integrator;
  path_settings.step = 1.0 / opt.path_steps;
  auto rep = run_sampled_check("convexity", metric.name(), n, seed, [&](std::size_t i, Rng& rng) {
    const Vec<N> q = dom.p + rng.in_ball<N>(rad), qt = dom.p + rng.in_ball<N>(rad);
    SampleOutcome o;
    o.inputs = detail::concat<N>({q, qt});
    const Vec<N> v = shoot(metric, q, qt, opt.shooting);
    const GeodesicPath<N> path = integrate_geodesic(metric, q, v, 1.0, path_settings);
    const auto& S = path.samples;
    const double h = path.step;
    double m = std::isfinite(dom.uniform_r) ? (dom.uniform_r - v.norm()) / dom.uniform_r : 1.0;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double Nk = n_function(dom.p, S[k].c);
      m = std::min(m, (dom.delta - Nk) / dom.delta);
      const double speed2 = S[k].y.squaredNorm();
      if (speed2 == 0) continue;
      const double twoB = 2.0 * S[k].y.dot(b_tensor(metric, dom.p, S[k].c) * S[k].y);
      m = std::min(m, twoB / (2.0 * speed2));
      if (k > 0 && k + 1 < S.size()) {
        const double fd = (n_function(dom.p, S[k + 1].c) - 2 * Nk + n_function(dom.p, S[k - 1].c)) / (h * h);
        const double err = std::abs(fd - twoB) / (2.0 * speed2);
        identity_err[i] = std::max(identity_err[i], err);
        m = std::min(m, (opt.identity_tolerance - err) / opt.identity_tolerance);
      }
    }
    o.margin = m;
    o.debit = path.error_estimate / std::max(rad, 1e-300) + detail::roundoff_floor(1.0);
    return o;
  });
  rep.stats["delta"] = dom.delta;
  rep.stats["max_identity_error"] = *std::max_element(identity_err.begin(), identity_err.end());
  return rep;
}

}  // namespace lipexp
