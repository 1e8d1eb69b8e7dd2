#pragma once

#include <map>
#include <string>
#include <vector>

#include "lipexp/geodesic.hpp"
#include "lipexp/mollifier.hpp"
#include "lipexp/random.hpp"

namespace lipexp {

/// Inputs of the ODE comparison bound φ.
struct ComparisonInputs {
  double k = 1.0;      // Lipschitz constant of the geodesic vector field on H
  double alpha = 0.0;  // sup deviation between the vector fields of g and g_ε on H
  double mu = 0.0;
  double b = 1.1;      // time horizon, b > 1
  double delta = 0.25; // H = ball of radius 2δ around (p, 0)
};

/// φ(ξ) = μ e^{ξk} + α (e^{ξk} − 1)/k. k = 0 uses the limit μ + αξ and sets
/// *limit_mode; negative or non-finite k throws NonpositiveK.
inline double phi(const ComparisonInputs& in, double xi, bool* limit_mode = nullptr) {
  if (!(xi >= 0)) throw Error(ErrorKind::InvalidArgument, "phi: xi must be nonnegative");
  if (!(in.k >= 0) || !std::isfinite(in.k)) throw Error(ErrorKind::NonpositiveK, "phi: k must be positive");
  if (limit_mode) *limit_mode = in.k == 0;
  if (in.k == 0) return in.mu + in.alpha * xi;
  return in.mu * std::exp(xi * in.k) + in.alpha * std::expm1(xi * in.k) / in.k;
}

/// Supremum of μ with φ(b) ≤ δ: (δ − α(e^{bk} − 1)/k) e^{−bk}.
inline double mu_bound(double delta, double b, double k, double alpha) {
  if (!(k > 0)) throw Error(ErrorKind::NonpositiveK, "mu_bound: k must be positive");
  return (delta - alpha * std::expm1(b * k) / k) * std::exp(-b * k);
}

/// r1 = shrink · min(1/(2K2), μ/2).
inline double radius_r1(double K2, double mu, double shrink = 0.95) {
  const double speed = K2 > 0 ? 1.0 / (2.0 * K2) : std::numeric_limits<double>::infinity();
  return shrink * std::min(speed, 0.5 * mu);
}

/// (1/C1) log((C1 + C2)/(C1/2 + C2)), continuous at C1 = 0 and +∞ when C1 = C2 = 0.
inline double r2_log_term(double C1, double C2) {
  if (C1 == 0) return C2 > 0 ? 1.0 / (2.0 * C2) : std::numeric_limits<double>::infinity();
  return std::log1p(0.5 * C1 / (0.5 * C1 + C2)) / C1;
}

/// r2 = shrink · min(r1, (1/C1) log((C1+C2)/(C1/2+C2)), 1/(2+C1)), C1 = 2K2, C2 = 4K1.
inline double radius_r2(double K1, double K2, double r1, double shrink = 0.95) {
  const double C1 = 2.0 * K2, C2 = 4.0 * K1;
  return shrink * std::min({r1, r2_log_term(C1, C2), 1.0 / (2.0 + C1)});
}

struct Envelope {
  double lower = 1.0;
  double upper = 1.0;
};

/// Integrated bound for ‖∇J(s)‖ with ‖∇J(0)‖ = 1:
/// −C2/C1 + (1 + C2/C1) e^{±C1 s}, and (1 ∓ C2 s) when C1 = 0.
inline Envelope jacobi_envelope(double C1, double C2, double s) {
  if (!(s >= 0)) throw Error(ErrorKind::InvalidArgument, "jacobi_envelope: s must be nonnegative");
  if (C1 == 0) return {1.0 - C2 * s, 1.0 + C2 * s};
  return {std::exp(-C1 * s) + C2 * std::expm1(-C1 * s) / C1, std::exp(C1 * s) + C2 * std::expm1(C1 * s) / C1};
}

struct R3Result {
  double r3 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double lower = 0.25;  // L(r3)
  double upper = 4.0;   // U(r3)
};

/// With A = 4K1/r2² and B = 8K2/r2: r3 = min(shrink·r2, root of L(s) = 1/8)
/// where L(s) = 1/4 − A s² − B s; c1 = log(U(r3)/L(r3)) with
/// U(s) = 4 + A s² + B s; c2 = max(c1 + log 2, log(1/r2)).
inline R3Result radius_r3_and_c(double K1, double K2, double r2, double shrink = 0.95) {
  if (!(r2 > 0)) throw Error(ErrorKind::InvalidArgument, "radius_r3: r2 must be positive");
  const double A = 4.0 * K1 / (r2 * r2), B = 8.0 * K2 / r2;
  const double disc = B + std::sqrt(B * B + 0.5 * A);
  const double root = disc > 0 ? 1.0 / (4.0 * disc) : std::numeric_limits<double>::infinity();
  R3Result out;
  out.r3 = std::min(shrink * r2, root);
  const double s = out.r3;
  out.lower = 0.25 - A * s * s - B * s;
  out.upper = 4.0 + A * s * s + B * s;
  if (!(out.lower > 0) || !(out.r3 > 0)) throw Error(ErrorKind::InfeasibleR3, "no positive r3");
  out.c1 = std::log(out.upper / out.lower);
  out.c2 = std::max(out.c1 + std::log(2.0), std::log(1.0 / r2));
  return out;
}

struct RadiusChain {
  double r4 = 0, r5 = 0, r_tilde = 0, r_hat = 0, r6 = 0, r7 = 0;
};

/// r4 = s e^{−c2} r3, r5 = s e^{−c2} r4, r̃ = e^{c2} r4, r̂ = s r5,
/// r6 = e^{−c2} r̂, r7 = s r6 (s = shrink).
inline RadiusChain radius_chain(double c2, double r3, double shrink = 0.95) {
  RadiusChain ch;
  const double e = std::exp(-c2);
  ch.r4 = shrink * e * r3;
  ch.r5 = shrink * e * ch.r4;
  ch.r_tilde = ch.r4 / e;
  ch.r_hat = shrink * ch.r5;
  ch.r6 = e * ch.r_hat;
  ch.r7 = shrink * ch.r6;
  return ch;
}

/// c3 = e^{c2}; c4 = e^{−c2}/mv_slack.
inline std::pair<double, double> bilipschitz_constants(double c2, double mv_slack = 1.5) {
  if (!(mv_slack >= 1)) throw Error(ErrorKind::InvalidArgument, "mv_slack must be at least 1");
  return {std::exp(c2), std::exp(-c2) / mv_slack};
}

struct CertificateConfig {
  double delta = 0.25;
  double b = 1.1;
  double shrink = 0.95;
  double mv_slack = 1.5;
  // mollified family
  double eps_start = 0.08;
  int levels = 5;
  double resolution = 6.0;         // ε / kernel grid spacing
  std::size_t cache_budget = 40'000'000;  // max (cached grid nodes) x (kernel offsets) per member
  // common domain
  double alpha_fraction = 0.5;     // α target as a fraction of the largest admissible α
  double k_floor = 1.0;
  double lipschitz_safety = 1.05;
  int domain_samples = 256;
  std::uint64_t seed = 1;
  // sup bounds on B(p, μ)
  double bounds_spacing = 0.125;   // grid spacing as a fraction of μ
  double bounds_safety = 1.05;
  IntegratorSettings integrator{};

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::ConfigError, what);
    };
    need(delta > 0, "delta must be positive");
    need(b > 1, "b must exceed 1");
    need(shrink > 0 && shrink < 1, "shrink must lie in (0, 1)");
    need(mv_slack >= 1, "mv_slack must be at least 1");
    need(eps_start > 0, "eps_start must be positive");
    need(levels >= 1, "levels must be at least 1");
    need(resolution >= 4, "resolution must be at least 4");
    need(alpha_fraction > 0 && alpha_fraction < 1, "alpha_fraction must lie in (0, 1)");
    need(k_floor > 0, "k_floor must be positive");
    need(lipschitz_safety >= 1 && bounds_safety >= 1, "safety factors must be at least 1");
    need(domain_samples >= 1, "domain_samples must be positive");
    need(bounds_spacing > 0 && bounds_spacing <= 1, "bounds_spacing must lie in (0, 1]");
  }
};

struct CommonDomain {
  double mu = 0.0;
  double epsilon0 = 0.0;
  std::size_t member_index = 0;  // family members [member_index, end) are covered
  double alpha = 0.0;
  double k = 0.0;
  double lipschitz_gamma = 0.0;  // L_Γ on the position ball
  double sup_gamma = 0.0;        // K_Γ on the position ball
  bool k_floor_active = false;
  std::vector<double> member_alpha;
  double alpha_target = 0.0;
};

/// Picks k, α, ε0 and μ for a common domain B_E(0, μ) of exp_p for g and every
/// g_ε with ε ≤ ε0, on H = B((p, 0), 2δ).
template <int N>
CommonDomain common_domain_mu(const MetricField<N>& g, const MollifiedFamily<N>& family, const Vec<N>& p,
                              const CertificateConfig& cfg) {
  if (family.members.empty()) throw Error(ErrorKind::InvalidArgument, "empty mollified family");
  const double R = 2.0 * cfg.delta;
  if (!g.domain().contains_ball(p, R))
    throw Error(ErrorKind::OutOfDomain, "working ball B(p, 2 delta) leaves the chart");
  for (const auto& m : family.members)
    if (!m->domain().contains_ball(p, R))
      throw Error(ErrorKind::OutOfDomain, "working ball B(p, 2 delta) leaves the mollified chart");

  // sample positions; each comes with N axis neighbours for difference quotients
  const int S = cfg.domain_samples;
  const double dq = R / 64.0;
  std::vector<Vec<N>> pts(static_cast<std::size_t>(S));
  for (int i = 0; i < S; ++i) {
    Rng rng = Rng::for_index(cfg.seed, static_cast<std::uint64_t>(i));
    pts[i] = i == 0 ? p : Vec<N>(p + rng.in_ball<N>(R - dq));
  }
  const std::size_t M = family.members.size();
  struct Slot {
    double sup_gamma = 0, lip = 0;
    std::vector<double> dev;
    std::vector<bool> sig_ok;
  };
  std::vector<Slot> slots(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    Slot& s = slots[i];
    s.dev.assign(M, 0.0);
    s.sig_ok.assign(M, true);
    const Vec<N>& x = pts[i];
    auto scan = [&](const MetricField<N>& metric, Christoffel<N>& gx) {
      gx = christoffel(metric, x);
      s.sup_gamma = std::max(s.sup_gamma, euclidean_norm<N>(gx));
      for (int a = 0; a < N; ++a) {
        Vec<N> y = x;
        y[a] += (x[a] - p[a] >= 0 ? -dq : dq);  // step towards the centre keeps y inside the ball
        const Christoffel<N> gy = christoffel(metric, y);
        Christoffel<N> d;
        for (int k = 0; k < N; ++k) d[k] = gy[k] - gx[k];
        s.lip = std::max(s.lip, euclidean_norm<N>(d) / dq);
      }
    };
    Christoffel<N> g0;
    scan(g, g0);
    for (std::size_t j = 0; j < M; ++j) {
      Christoffel<N> ge;
      scan(*family.members[j], ge);
      Christoffel<N> d;
      for (int k = 0; k < N; ++k) d[k] = ge[k] - g0[k];
      s.dev[j] = euclidean_norm<N>(d);
      try {
        s.sig_ok[j] = signature_of<N>(family.members[j]->g(x)) == g.signature();
      } catch (const Error&) {
        s.sig_ok[j] = false;
      }
    }
  });

  CommonDomain out;
  std::vector<double> dev(M, 0.0);
  std::vector<bool> sig(M, true);
  for (const auto& s : slots) {
    out.sup_gamma = std::max(out.sup_gamma, s.sup_gamma);
    out.lipschitz_gamma = std::max(out.lipschitz_gamma, s.lip);
    for (std::size_t j = 0; j < M; ++j) {
      dev[j] = std::max(dev[j], s.dev[j]);
      sig[j] = sig[j] && s.sig_ok[j];
    }
  }
  out.sup_gamma *= cfg.lipschitz_safety;
  out.lipschitz_gamma *= cfg.lipschitz_safety;
  // Lipschitz bound of (c, y) ↦ (y, −Γ(c)(y, y)) for ‖y‖ ≤ 2δ
  const double raw_k = 1.0 + out.lipschitz_gamma * R * R + 2.0 * out.sup_gamma * R;
  out.k = std::max(cfg.k_floor, raw_k);
  out.k_floor_active = cfg.k_floor >= raw_k;
  out.alpha_target = cfg.alpha_fraction * cfg.delta * out.k / std::expm1(cfg.b * out.k);
  for (std::size_t j = 0; j < M; ++j) out.member_alpha.push_back(cfg.lipschitz_safety * dev[j] * R * R);

  // largest ε whose whole tail (all smaller ε) meets the α target and keeps the signature
  std::size_t chosen = M;
  double tail_alpha = 0.0;
  bool tail_ok = true;
  for (std::size_t j = M; j-- > 0;) {
    tail_alpha = std::max(tail_alpha, out.member_alpha[j]);
    tail_ok = tail_ok && sig[j] && tail_alpha <= out.alpha_target;
    if (!tail_ok) break;
    chosen = j;
    out.alpha = tail_alpha;
  }
  if (chosen == M)
    throw Error(ErrorKind::NoFeasibleMu, "no family member meets the closeness target; refine the family or enlarge delta");
  out.member_index = chosen;
  out.epsilon0 = family.members[chosen]->epsilon();
  out.mu = cfg.shrink * mu_bound(cfg.delta, cfg.b, out.k, out.alpha);
  if (!(out.mu > 0)) throw Error(ErrorKind::NoFeasibleMu, "phi(b) < delta has no positive solution");
  return out;
}

/// The radius chain and constants for one base point, with the inputs that
/// produced them. Radii are tangent-space Euclidean lengths.
struct RadiusCertificate {
  std::vector<double> point;
  std::string metric_name;
  // inputs
  double K1 = 0, K2 = 0, mu = 0, epsilon0 = 0;
  double bounds_radius = 0;
  double k = 0, alpha = 0, delta = 0, b = 0;
  bool k_floor_active = false;
  // constants
  double C1 = 0, C2 = 0, c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  // radii
  double r1 = 0, r2 = 0, r3 = 0, r4 = 0, r5 = 0, r_tilde = 0, r_hat = 0, r6 = 0, r7 = 0;
  double shrink = 0.95, mv_slack = 1.5;
  std::vector<double> epsilons;  // family levels, descending
  std::vector<double> member_alpha;
  std::string norm_convention =
      "spectral norm of the flattened tensor: Gamma as N x N^2, R as N x N^3 (row = upper index)";
  std::string integrator;
  std::string kernel_profile;
  std::vector<std::string> notes;
  std::map<std::string, std::string> formulas;

  /// Violated invariants (empty when the certificate is self-consistent).
  std::vector<std::string> invariant_violations() const {
    std::vector<std::string> bad;
    auto need = [&](bool ok, const char* what) {
      if (!ok) bad.emplace_back(what);
    };
    const double e = std::exp(-c2);
    const double tol = 1e-12;
    need(K1 >= 0 && K2 >= 0, "K1, K2 >= 0");
    need(mu > 0, "mu > 0");
    need(r7 > 0, "r7 > 0");
    need(r7 < r6 && r6 < r_hat && r_hat < r5 && r5 < r4 && r4 < r3, "r7 < r6 < r_hat < r5 < r4 < r3");
    need(r3 <= r2 && r2 <= r1 && r1 <= 0.5 * mu * (1 + tol), "r3 <= r2 <= r1 <= mu/2");
    need(r4 < e * r3 * (1 + tol) && r5 < e * r4 * (1 + tol), "r4 < e^-c2 r3, r5 < e^-c2 r4");
    need(std::abs(r6 - e * r_hat) <= tol * r6, "r6 = e^-c2 r_hat");
    need(c2 > 0, "c2 > 0");
    need(c3 >= 1 && 1 >= 1 / c3 && c4 <= c3, "c4 <= 1 <= c3");
    return bad;
  }
};

template <int N>
struct CertifiedRun {
  RadiusCertificate cert;
  MollifiedFamily<N> family;
  CommonDomain domain;
  /// Members covered by the certificate (ε ≤ ε0).
  std::vector<std::shared_ptr<const MollifiedMetric<N>>> covered() const {
    return {family.members.begin() + static_cast<std::ptrdiff_t>(domain.member_index), family.members.end()};
  }
};

/// Half-width of the cached region: μ ≤ δ e^{−b·k_floor} for every outcome.
inline double cache_half_width(const CertificateConfig& cfg) {
  return cfg.delta * std::exp(-cfg.b * cfg.k_floor) * 1.05;
}

template <int N>
MollifiedFamily<N> certificate_family(const MetricPtr<N>& g, const Vec<N>& p, const CertificateConfig& cfg) {
  const double half = cache_half_width(cfg);
  Box<N> region = Box<N>::centered(p, half);
  MollifiedFamily<N> fam;
  fam.base = g;
  fam.region = region;
  fam.resolution = cfg.resolution;
  const auto profile = bump_profile<N>();
  for (int j = 0; j < cfg.levels; ++j) {
    const double eps = cfg.eps_start * std::ldexp(1.0, -j);
    const auto kernel = build_kernel<N>(eps, eps / cfg.resolution, profile);
    // convolution work of the cache; members over budget use direct quadrature
    const double nodes_per_axis = 2.0 * half / kernel.spacing + 5.0;
    const double work = std::pow(nodes_per_axis, N) * static_cast<double>(kernel.offsets.size());
    if (work <= static_cast<double>(cfg.cache_budget)) {
      fam.members.push_back(mollify<N>(g, kernel, region));
    } else {
      fam.members.push_back(std::make_shared<const MollifiedMetric<N>>(
          g, std::make_shared<const MollifierKernel<N>>(kernel), nullptr));
    }
  }
  return fam;
}

/// mollify → common domain → sup bounds → radius chain → constants.
template <int N>
CertifiedRun<N> full_certificate(const MetricPtr<N>& g, const Vec<N>& p, const CertificateConfig& cfg = {}) {
  cfg.validate();
  if (!g->domain().contains(p)) throw Error(ErrorKind::OutOfDomain, "base point outside the chart");
  CertifiedRun<N> run;
  run.family = certificate_family<N>(g, p, cfg);
  run.domain = common_domain_mu<N>(*g, run.family, p, cfg);
  const CommonDomain& cd = run.domain;

  RadiusCertificate& c = run.cert;
  c.point = to_std<N>(p);
  c.metric_name = g->name();
  c.mu = cd.mu;
  c.epsilon0 = cd.epsilon0;
  c.k = cd.k;
  c.alpha = cd.alpha;
  c.delta = cfg.delta;
  c.b = cfg.b;
  c.k_floor_active = cd.k_floor_active;
  c.shrink = cfg.shrink;
  c.mv_slack = cfg.mv_slack;
  c.epsilons = run.family.epsilons();
  c.member_alpha = cd.member_alpha;
  c.integrator = cfg.integrator.describe();
  c.kernel_profile = run.family.members.front()->kernel().profile_name +
                     "; resolution eps/h=" + std::to_string(cfg.resolution);

  // K1 over covered members, K2 also over the raw metric
  c.bounds_radius = cd.mu;
  const double spacing = cfg.bounds_spacing * cd.mu;
  SupBoundsOptions opt;
  opt.safety = cfg.bounds_safety;
  for (const auto& m : run.covered()) {
    const auto b = sup_bounds<N>(*m, p, cd.mu, spacing, opt);
    c.K1 = std::max(c.K1, b.K1);
    c.K2 = std::max(c.K2, b.K2);
  }
  {
    SupBoundsOptions raw = opt;
    raw.curvature = g->has_curvature();
    const auto b = sup_bounds<N>(*g, p, cd.mu, spacing, raw);
    c.K2 = std::max(c.K2, b.K2);
    c.K1 = std::max(c.K1, b.K1);
  }
  if (!std::isfinite(c.K1) || !std::isfinite(c.K2)) throw Error(ErrorKind::InfeasibleBounds, "non-finite bounds");

  c.C1 = 2.0 * c.K2;
  c.C2 = 4.0 * c.K1;
  c.r1 = radius_r1(c.K2, c.mu, cfg.shrink);
  c.r2 = radius_r2(c.K1, c.K2, c.r1, cfg.shrink);
  const R3Result r3 = radius_r3_and_c(c.K1, c.K2, c.r2, cfg.shrink);
  c.r3 = r3.r3;
  c.c1 = r3.c1;
  c.c2 = r3.c2;
  const RadiusChain ch = radius_chain(c.c2, c.r3, cfg.shrink);
  c.r4 = ch.r4;
  c.r5 = ch.r5;
  c.r_tilde = ch.r_tilde;
  c.r_hat = ch.r_hat;
  c.r6 = ch.r6;
  c.r7 = ch.r7;
  std::tie(c.c3, c.c4) = bilipschitz_constants(c.c2, cfg.mv_slack);

  if (cd.k_floor_active) c.notes.push_back("k floor active: sampled Lipschitz bound below k_floor");
  if (cd.alpha == 0) c.notes.push_back("limit mode: alpha = 0 (mollification leaves Gamma unchanged)");
  if (c.K2 == 0) c.notes.push_back("limit mode: K2 = 0, r1 = shrink*mu/2");
  if (c.K1 == 0 && c.K2 == 0) c.notes.push_back("limit mode: K1 = K2 = 0, r2 = shrink*min(r1, 1/2), r3 = shrink*r2");
  c.formulas = {
      {"phi", "phi(xi) = mu*exp(xi*k) + alpha*(exp(xi*k)-1)/k"},
      {"mu", "shrink*(delta - alpha*(exp(b*k)-1)/k)*exp(-b*k)"},
      {"k", "max(k_floor, 1 + L_Gamma*(2 delta)^2 + 2*K_Gamma*(2 delta))"},
      {"alpha", "safety*sup|Gamma_g - Gamma_eps|_E*(2 delta)^2 over eps <= eps0"},
      {"r1", "shrink*min(1/(2 K2), mu/2)"},
      {"C1", "2 K2"},
      {"C2", "4 K1"},
      {"r2", "shrink*min(r1, log((C1+C2)/(C1/2+C2))/C1, 1/(2+C1))"},
      {"r3", "min(shrink*r2, s*) with 1/4 - 4K1/r2^2 s*^2 - 8K2/r2 s* = 1/8"},
      {"c1", "log(U(r3)/L(r3)), U = 4 + 4K1/r2^2 s^2 + 8K2/r2 s, L = 1/4 - 4K1/r2^2 s^2 - 8K2/r2 s"},
      {"c2", "max(c1 + log 2, log(1/r2))"},
      {"r4", "shrink*exp(-c2)*r3"},
      {"r5", "shrink*exp(-c2)*r4"},
      {"r_tilde", "exp(c2)*r4"},
      {"r_hat", "shrink*r5"},
      {"r6", "exp(-c2)*r_hat"},
      {"r7", "shrink*r6"},
      {"c3", "exp(c2)"},
      {"c4", "exp(-c2)/mv_slack"},
  };
  const auto bad = c.invariant_violations();
  if (!bad.empty()) throw Error(ErrorKind::InfeasibleBounds, "certificate invariant violated: " + bad.front());
  return run;
}

}  // namespace lipexp
