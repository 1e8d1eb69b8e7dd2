#pragma once

#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "lipexp/certificate.hpp"
#include "lipexp/parallel.hpp"
#include "lipexp/random.hpp"

namespace lipexp {

struct Violation {
  std::size_t index = 0;
  std::vector<double> inputs;
  double margin = 0.0;
};

/// Outcome of one sampled check. Margins are relative (dimensionless) and
/// negative values mean the inequality is violated by the raw numbers; a
/// sample only counts as a violation when margin + error_debit < 0, i.e. the
/// violation exceeds the integrator's own error estimate.
struct VerificationReport {
  std::string check;
  std::string subject;
  std::size_t samples = 0;
  std::size_t passed = 0;
  std::size_t inconclusive = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<Violation> violations;  // first 10 by sample index
  std::size_t violation_count = 0;
  std::uint64_t seed = 0;
  std::string certificate;
  std::vector<std::string> notes;
  std::map<std::string, double> stats;

  bool ok() const { return violation_count == 0; }
};

struct SampleOutcome {
  bool inconclusive = false;
  std::string reason;
  double margin = std::numeric_limits<double>::infinity();
  double debit = 0.0;
  std::vector<double> inputs;
};

inline constexpr std::size_t kMaxRecordedViolations = 10;

/// Evaluates `sample(i, rng)` for i < n in parallel (rng seeded per index) and
/// reduces in index order, so the report does not depend on scheduling.
template <class Fn>
VerificationReport run_sampled_check(std::string check, std::string subject, std::size_t n, std::uint64_t seed,
                                     Fn&& sample) {
  std::vector<SampleOutcome> out(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = Rng::for_index(seed, i);
    try {
      out[i] = sample(i, rng);
    } catch (const Error& e) {
      out[i] = SampleOutcome{};
      out[i].inconclusive = true;
      out[i].reason = std::string(to_string(e.kind()));
    }
  });
  VerificationReport rep;
  rep.check = std::move(check);
  rep.subject = std::move(subject);
  rep.samples = n;
  rep.seed = seed;
  double max_debit = 0.0;
  std::map<std::string, double> reasons;
  for (std::size_t i = 0; i < n; ++i) {
    const SampleOutcome& o = out[i];
    if (o.inconclusive) {
      ++rep.inconclusive;
      reasons["inconclusive." + o.reason] += 1;
      continue;
    }
    rep.worst_margin = std::min(rep.worst_margin, o.margin);
    max_debit = std::max(max_debit, o.debit);
    if (o.margin + o.debit < 0) {
      ++rep.violation_count;
      if (rep.violations.size() < kMaxRecordedViolations) rep.violations.push_back({i, o.inputs, o.margin});
    } else {
      ++rep.passed;
    }
  }
  rep.stats["max_error_debit"] = max_debit;
  for (const auto& [k, v] : reasons) rep.stats[k] = v;
  return rep;
}

namespace detail {

inline double roundoff_floor(double scale) { return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale); }

template <int N>
std::vector<double> concat(std::initializer_list<Vec<N>> vs, std::initializer_list<double> extra = {}) {
  std::vector<double> out;
  for (const auto& v : vs) out.insert(out.end(), v.data(), v.data() + N);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

template <int N>
double metric_norm(const MetricField<N>& metric, const Vec<N>& x, const Vec<N>& w) {
  return std::sqrt(std::max(0.0, w.dot(metric.g(x) * w)));
}

}  // namespace detail

/// c4‖u − v‖ ≤ ‖exp_p(u) − exp_p(v)‖ ≤ c3‖u − v‖ for n uniform pairs in B_E(0, radius).
template <int N>
VerificationReport verify_bilipschitz(const MetricField<N>& metric, const Vec<N>& p, double c3, double c4,
                                      double radius, double mu, std::size_t n, std::uint64_t seed,
                                      const IntegratorSettings& settings = {}) {
  auto rep = run_sampled_check("bilipschitz", metric.name(), n, seed, [&](std::size_t, Rng& rng) {
    const Vec<N> u = rng.in_ball<N>(radius), v = rng.in_ball<N>(radius);
    SampleOutcome o;
    o.inputs = detail::concat<N>({u, v});
    const double d = (u - v).norm();
    if (d == 0) return o;
    double eu = 0, ev = 0;
    const Vec<N> Eu = exp_map(metric, p, u, mu, settings, &eu);
    const Vec<N> Ev = exp_map(metric, p, v, mu, settings, &ev);
    const double D = (Eu - Ev).norm();
    o.margin = std::min(D - c4 * d, c3 * d - D) / d;
    o.debit = (eu + ev + detail::roundoff_floor(p.norm())) / d;
    return o;
  });
  rep.stats["c3"] = c3;
  rep.stats["c4"] = c4;
  rep.stats["radius"] = radius;
  return rep;
}

template <int N>
VerificationReport verify_bilipschitz(const MetricField<N>& metric, const Vec<N>& p, const RadiusCertificate& cert,
                                      std::size_t n, std::uint64_t seed, const IntegratorSettings& settings = {}) {
  return verify_bilipschitz(metric, p, cert.c3, cert.c4, cert.r7, cert.mu, n, seed, settings);
}

/// For unit Euclidean speed and unit ∇J(0), J(0) = 0, on [0, r2]:
/// ‖J‖_E ≤ 1 and ½ ≤ ‖∇J‖_E ≤ 2; with envelope constants also
/// lower(s) ≤ ‖∇J(s)‖_E ≤ upper(s).
template <int N>
VerificationReport verify_jacobi_bounds(const MetricField<N>& metric, const Vec<N>& p, double r2, std::size_t n,
                                        std::uint64_t seed, const IntegratorSettings& settings = {},
                                        std::optional<std::pair<double, double>> envelope = std::nullopt) {
  if (!metric.has_curvature())
    throw Error(ErrorKind::InsufficientRegularity, metric.name() + ": Jacobi checks need curvature");
  auto rep = run_sampled_check("jacobi", metric.name(), n, seed, [&](std::size_t, Rng& rng) {
    const Vec<N> v = rng.unit_vector<N>(), w = rng.unit_vector<N>();
    SampleOutcome o;
    o.inputs = detail::concat<N>({v, w});
    const GeodesicPath<N> path = integrate_geodesic(metric, p, v, r2, settings);
    const JacobiSolution<N> sol = jacobi_field(metric, path, Vec<N>::Zero().eval(), w);
    for (const auto& s : sol.samples) {
      const double nj = s.J.norm(), nd = s.D.norm();
      double m = std::min({1.0 - nj, nd - 0.5, (2.0 - nd) / 2.0});
      if (envelope) {
        const Envelope e = jacobi_envelope(envelope->first, envelope->second, s.s);
        m = std::min({m, nd - e.lower, (e.upper - nd) / e.upper});
      }
      o.margin = std::min(o.margin, m);
    }
    o.debit = sol.error_estimate + path.error_estimate + detail::roundoff_floor(1.0);
    return o;
  });
  rep.stats["r2"] = r2;
  if (envelope) {
    rep.stats["C1"] = envelope->first;
    rep.stats["C2"] = envelope->second;
  }
  return rep;
}

struct InjectivityOptions {
  int grid_points = 41;   // per axis across [−r, r], used when spacing == 0
  double spacing = 0.0;   // explicit grid spacing (overrides grid_points)
  double tolerance = 0.0; // subtracted from the lower bound, on top of the error debit
  std::size_t point_budget = 200'000;
  std::size_t pair_budget = 20'000'000;
  std::uint64_t seed = 1;  // pair subsampling
  IntegratorSettings integrator{};
};

/// Flags grid pairs u ≠ v in B_E(0, r) with ‖exp(u) − exp(v)‖ < c4‖u − v‖ − tol.
/// Grid points whose geodesic fails are dropped (counted inconclusive).
template <int N>
VerificationReport verify_injectivity(const MetricField<N>& metric, const Vec<N>& p, double r, double c4,
                                      const InjectivityOptions& opt = {}) {
  const double h = opt.spacing > 0 ? opt.spacing : 2.0 * r / (opt.grid_points - 1);
  const auto grid = ball_grid<N>(Vec<N>::Zero(), r, h);
  if (grid.size() > opt.point_budget)
    throw Error(ErrorKind::PairBudgetExceeded, "injectivity grid has " + std::to_string(grid.size()) +
                                                   " points, budget " + std::to_string(opt.point_budget));
  struct Img {
    bool ok = false;
    Vec<N> x;
    double err = 0;
  };
  std::vector<Img> img(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      img[i].x = exp_map(metric, p, grid[i], std::numeric_limits<double>::infinity(), opt.integrator, &img[i].err);
      img[i].ok = true;
    } catch (const Error&) {
      img[i].ok = false;
    }
  });
  std::vector<std::size_t> good;
  for (std::size_t i = 0; i < img.size(); ++i)
    if (img[i].ok) good.push_back(i);
  const std::size_t m = good.size();
  const std::size_t all_pairs = m * (m - (m > 0)) / 2;
  const bool subsample = all_pairs > opt.pair_budget;
  const std::size_t n_pairs = subsample ? opt.pair_budget : all_pairs;

  auto pair_at = [&](std::size_t k, Rng& rng) -> std::pair<std::size_t, std::size_t> {
    if (subsample) {
      std::size_t a = static_cast<std::size_t>(rng.uniform() * m), b = static_cast<std::size_t>(rng.uniform() * (m - 1));
      if (b >= a) ++b;
      return {good[a], good[b]};
    }
    // k ↦ (a, b), a < b, row by row
    std::size_t a = static_cast<std::size_t>((2.0 * m - 1 - std::sqrt((2.0 * m - 1) * (2.0 * m - 1) - 8.0 * k)) / 2);
    auto row_start = [&](std::size_t r) { return r * (2 * m - r - 1) / 2; };
    while (a > 0 && row_start(a) > k) --a;
    while (row_start(a + 1) <= k) ++a;
    return {good[a], good[a + 1 + (k - row_start(a))]};
  };
  auto rep = run_sampled_check("injectivity", metric.name(), n_pairs, opt.seed, [&](std::size_t k, Rng& rng) {
    const auto [a, b] = pair_at(k, rng);
    SampleOutcome o;
    o.inputs = detail::concat<N>({grid[a], grid[b]});
    const double d = (grid[a] - grid[b]).norm();
    const double D = (img[a].x - img[b].x).norm();
    o.margin = (D - c4 * d + opt.tolerance) / d;
    o.debit = (img[a].err + img[b].err + detail::roundoff_floor(p.norm())) / d;
    return o;
  });
  rep.stats["grid_points"] = static_cast<double>(grid.size());
  rep.stats["failed_points"] = static_cast<double>(grid.size() - m);
  rep.stats["radius"] = r;
  rep.stats["c4"] = c4;
  rep.stats["spacing"] = h;
  if (subsample) rep.notes.push_back("pair budget exceeded; checked a seeded random subsample of pairs");
  return rep;
}

/// sn_α(t): sin(√α t)/√α (α > 0), t (α = 0), sinh(√−α t)/√−α (α < 0).
inline double sn_alpha(double alpha, double t) {
  if (!(t >= 0)) throw Error(ErrorKind::InvalidArgument, "sn_alpha: t must be nonnegative");
  const double x = alpha * t * t;
  if (std::abs(x) < 1e-8) return t * (1.0 - x / 6.0 + x * x / 120.0);
  if (alpha > 0) return std::sin(std::sqrt(alpha) * t) / std::sqrt(alpha);
  return std::sinh(std::sqrt(-alpha) * t) / std::sqrt(-alpha);
}

struct RauchOptions {
  double curvature_tolerance = 1e-6;
  int curvature_points = 3;  // sectional-curvature probes along each sampled geodesic
  IntegratorSettings integrator{};
};

/// sn_κ(t)/t ‖w‖ ≤ ‖T_{tv} exp_p(w)‖ ≤ sn_ρ(t)/t ‖w‖ for unit v, t ∈ (0, r],
/// norms taken in the metric. Sectional curvature is probed along every
/// sampled geodesic and must lie in [ρ, κ] (CurvatureOutOfRange otherwise).
template <int N>
VerificationReport verify_rauch(const MetricField<N>& metric, const Vec<N>& p, double rho, double kappa, double r,
                                std::size_t n, std::uint64_t seed, const RauchOptions& opt = {}) {
  if (!(metric.signature() == Signature{N, 0}))
    throw Error(ErrorKind::SignatureMismatch, "Rauch comparison needs a Riemannian metric");
  if (!metric.has_curvature())
    throw Error(ErrorKind::InsufficientRegularity, metric.name() + ": Rauch comparison needs curvature");
  if (!(rho <= kappa)) throw Error(ErrorKind::InvalidArgument, "need rho <= kappa");
  if (kappa > 0 && !(r < std::numbers::pi / std::sqrt(kappa)))
    throw Error(ErrorKind::InvalidArgument, "r must stay below pi/sqrt(kappa)");
  const Mat<N> gp = metric.g(p);
  std::vector<double> kmin(n, std::numeric_limits<double>::infinity()), kmax(n, -std::numeric_limits<double>::infinity());
  auto rep = run_sampled_check("rauch", metric.name(), n, seed, [&](std::size_t i, Rng& rng) {
    Vec<N> v = rng.unit_vector<N>(), w = rng.unit_vector<N>();
    v /= std::sqrt(v.dot(gp * v));
    w /= std::sqrt(w.dot(gp * w));
    const double t = r * (1.0 - rng.uniform());  // (0, r]
    SampleOutcome o;
    o.inputs = detail::concat<N>({v, w}, {t});
    const GeodesicPath<N> path = integrate_geodesic(metric, p, Vec<N>(t * v), 1.0, opt.integrator);
    const JacobiSolution<N> sol = jacobi_field(metric, path, Vec<N>::Zero().eval(), w);
    for (int q = 0; q < opt.curvature_points; ++q) {
      const PhaseState<N> s = path.at((q + 0.5) / opt.curvature_points);
      Vec<N> e = rng.unit_vector<N>();
      try {
        const double K = sectional_curvature(metric, s.c, s.y, e);
        kmin[i] = std::min(kmin[i], K);
        kmax[i] = std::max(kmax[i], K);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::DegeneratePlane) throw;
      }
    }
    const Vec<N> c1 = path.final().c;
    const double T = detail::metric_norm(metric, c1, sol.final().J);
    const double lo = sn_alpha(kappa, t) / t, hi = sn_alpha(rho, t) / t;
    o.margin = std::min((T - lo) / lo, (hi - T) / hi);
    o.debit = (sol.error_estimate + path.error_estimate) * std::sqrt(metric.g(c1).norm()) / lo +
              detail::roundoff_floor(1.0);
    return o;
  });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::min(lo, kmin[i]);
    hi = std::max(hi, kmax[i]);
  }
  rep.stats["rho"] = rho;
  rep.stats["kappa"] = kappa;
  rep.stats["r"] = r;
  rep.stats["sampled_K_min"] = lo;
  rep.stats["sampled_K_max"] = hi;
  if (lo < rho - opt.curvature_tolerance || hi > kappa + opt.curvature_tolerance)
    throw Error(ErrorKind::CurvatureOutOfRange, "sampled sectional curvature in [" + std::to_string(lo) + ", " +
                                                    std::to_string(hi) + "] leaves [rho, kappa]");
  return rep;
}

/// e^{−2c2} ≤ eig((exp_p)^* g_E) ≤ e^{2c2} at n uniform v ∈ B_E(0, r).
template <int N>
VerificationReport verify_pullback_sandwich(const MetricField<N>& metric, const Vec<N>& p, double c2, double r,
                                            double mu, std::size_t n, std::uint64_t seed,
                                            const IntegratorSettings& settings = {}) {
  if (!metric.has_curvature())
    throw Error(ErrorKind::InsufficientRegularity, metric.name() + ": pullback check needs curvature");
  const double lo = std::exp(-2 * c2), hi = std::exp(2 * c2);
  auto rep = run_sampled_check("pullback", metric.name(), n, seed, [&](std::size_t, Rng& rng) {
    const Vec<N> v = rng.in_ball<N>(r);
    SampleOutcome o;
    o.inputs = detail::concat<N>({v});
    double err = 0;
    const auto [a, b] = pullback_ratio(metric, p, v, mu, settings, &err);
    o.margin = std::min((a - lo) / lo, (hi - b) / hi);
    const double sv = std::sqrt(std::max(b, 0.0));
    o.debit = (2 * sv * err + err * err) / lo + detail::roundoff_floor(1.0);
    return o;
  });
  rep.stats["c2"] = c2;
  rep.stats["radius"] = r;
  return rep;
}

template <int N>
VerificationReport verify_pullback_sandwich(const MetricField<N>& metric, const Vec<N>& p,
                                            const RadiusCertificate& cert, std::size_t n, std::uint64_t seed,
                                            const IntegratorSettings& settings = {}) {
  return verify_pullback_sandwich(metric, p, cert.c2, cert.r3, cert.mu, n, seed, settings);
}

/// ½‖v‖_E ≤ ‖y(t)‖_E ≤ 2‖v‖_E along geodesics with ‖v‖_E = 1 on [0, r1].
template <int N>
VerificationReport verify_speed_sandwich(const MetricField<N>& metric, const Vec<N>& p, double r1, std::size_t n,
                                         std::uint64_t seed, const IntegratorSettings& settings = {}) {
  auto rep = run_sampled_check("speed", metric.name(), n, seed, [&](std::size_t, Rng& rng) {
    const Vec<N> v = rng.unit_vector<N>();
    SampleOutcome o;
    o.inputs = detail::concat<N>({v});
    const GeodesicPath<N> path = integrate_geodesic(metric, p, v, r1, settings);
    for (const auto& s : path.samples) {
      const double y = s.y.norm();
      o.margin = std::min({o.margin, y - 0.5, (2.0 - y) / 2.0});
    }
    o.debit = path.velocity_error + detail::roundoff_floor(1.0);
    return o;
  });
  rep.stats["r1"] = r1;
  return rep;
}

}  // namespace lipexp
