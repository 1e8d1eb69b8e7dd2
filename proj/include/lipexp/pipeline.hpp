#pragma once

#include <filesystem>
#include <ostream>
#include <type_traits>

#include "lipexp/io/serialize.hpp"

namespace lipexp {

/// Calls f(std::integral_constant<int, N>{}) for N = dim ∈ {2, 3, 4}.
template <class F>
decltype(auto) dispatch_dimension(int dim, F&& f) {
  switch (dim) {
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
    case 4: return f(std::integral_constant<int, 4>{});
    default: throw Error(ErrorKind::InvalidArgument, "dimension must be 2, 3 or 4, got " + std::to_string(dim));
  }
}

/// Runs `body` and re-raises any library error with the stage name prefixed.
template <class F>
decltype(auto) in_stage(const char* stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + stage + ": " + e.message(), e.exit_time());
  }
}

/// Family members covered by a certificate: ε ≤ ε0.
template <int N>
std::vector<std::shared_ptr<const MollifiedMetric<N>>> covered_members(const MollifiedFamily<N>& fam,
                                                                       double epsilon0) {
  std::vector<std::shared_ptr<const MollifiedMetric<N>>> out;
  for (const auto& m : fam.members)
    if (m->kernel().epsilon <= epsilon0 * (1 + 1e-12)) out.push_back(m);
  return out;
}

/// The verification suite for one certificate. Checks that do not apply to a
/// metric (no curvature, not Riemannian, no curvature bounds configured) are
/// skipped when `suite` is "all" and raise otherwise.
template <int N>
std::vector<VerificationReport> run_suite(const MetricPtr<N>& g, const RadiusCertificate& cert,
                                          const std::vector<std::shared_ptr<const MollifiedMetric<N>>>& members,
                                          const io::VerifyConfig& v, const IntegratorSettings& integrator,
                                          const std::string& cert_ref, std::vector<std::string>* skipped = nullptr) {
  const Vec<N> p = to_vec<N>(cert.point);
  const bool all = v.suite == "all";
  auto want = [&](const char* s) { return all || v.suite == s; };
  auto skip = [&](const std::string& why) {
    if (!all) throw Error(ErrorKind::InvalidArgument, "suite '" + v.suite + "' not applicable: " + why);
    if (skipped) skipped->push_back(why);
  };
  std::vector<const MetricField<N>*> subjects{g.get()};
  if (v.members)
    for (const auto& m : members) subjects.push_back(m.get());
  std::vector<VerificationReport> out;

  if (want("bilip"))
    for (const auto* m : subjects) out.push_back(verify_bilipschitz<N>(*m, p, cert, v.samples, v.seed, integrator));
  if (want("jacobi"))
    for (const auto* m : subjects) {
      if (!m->has_curvature()) {
        skip("jacobi: " + m->name() + " has no curvature");
        continue;
      }
      out.push_back(verify_jacobi_bounds<N>(*m, p, cert.r2, v.samples, v.seed, integrator,
                                            std::make_pair(cert.C1, cert.C2)));
    }
  if (want("pullback"))
    for (const auto* m : subjects) {
      if (!m->has_curvature()) {
        skip("pullback: " + m->name() + " has no curvature");
        continue;
      }
      out.push_back(verify_pullback_sandwich<N>(*m, p, cert, v.samples, v.seed, integrator));
    }
  if (want("speed")) out.push_back(verify_speed_sandwich<N>(*g, p, cert.r1, v.samples, v.seed, integrator));
  if (want("inj")) {
    InjectivityOptions opt;
    opt.grid_points = v.injectivity_points;
    opt.seed = v.seed;
    opt.integrator = integrator;
    out.push_back(verify_injectivity<N>(*g, p, cert.r7, cert.c4, opt));
  }
  if (want("rauch")) {
    if (!v.rauch_rho) {
      skip("rauch: no curvature bounds (rauch_rho, rauch_kappa) configured");
    } else if (!(g->signature() == Signature{N, 0}) || !g->has_curvature()) {
      skip("rauch: " + g->name() + " is not a Riemannian metric with curvature");
    } else {
      RauchOptions opt;
      opt.integrator = integrator;
      out.push_back(verify_rauch<N>(*g, p, *v.rauch_rho, *v.rauch_kappa, v.rauch_radius.value_or(cert.r1),
                                    v.samples, v.seed, opt));
    }
  }
  for (auto& r : out) r.certificate = cert_ref;
  return out;
}

struct PipelineResult {
  int exit_code = 0;  // 0 accepted, 1 a verification failed
  bool accepted = false;
  std::vector<std::string> artifacts;
};

namespace detail {

template <int N>
PipelineResult run_pipeline_n(const io::RunConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  PipelineResult res;
  const MetricPtr<N> g = in_stage("load", [&] { return io::build_metric<N>(cfg.metric); });
  const Vec<N> p = to_vec<N>(cfg.point);
  fs::create_directories(cfg.out_dir);
  auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(cfg.out_dir) / name).string();
    io::write_text(path, text);
    res.artifacts.push_back(path);
  };

  const CertifiedRun<N> run = in_stage("certify", [&] { return full_certificate<N>(g, p, cfg.cert); });
  const io::json cert_doc = io::certificate_to_json(run.cert, cfg.metric, cfg.cert);
  const std::string cert_text = io::dump(cert_doc);
  const std::string cert_ref = io::fingerprint(cert_text);
  in_stage("certify", [&] {
    // schema round trip before anything is written
    const auto back = io::certificate_from_json(io::json::parse(cert_text));
    if (io::dump(io::certificate_to_json(back.cert, back.metric, back.config)) != cert_text)
      throw Error(ErrorKind::ParseError, "certificate does not round-trip");
  });
  write("certificate.json", cert_text);
  log << "certificate " << cert_ref << ": mu=" << run.cert.mu << " r7=" << run.cert.r7 << " c3=" << run.cert.c3
      << " c4=" << run.cert.c4 << "\n";

  in_stage("mollify", [&] {
    const ConvergenceReport conv =
        convergence_report<N>(run.family, Box<N>::centered(p, run.cert.mu), cfg.convergence_probes);
    std::ostringstream csv;
    conv.write_csv(csv);
    write("convergence.csv", csv.str());
  });

  std::vector<std::string> skipped;
  const auto reports = in_stage("verify", [&] {
    return run_suite<N>(g, run.cert, run.covered(), cfg.verify, cfg.cert.integrator, cert_ref, &skipped);
  });
  io::json rep_doc = io::reports_document(reports, cert_ref);
  rep_doc["skipped"] = skipped;
  write("reports.json", io::dump(rep_doc));
  log << io::summary_table(reports);
  for (const auto& s : skipped) log << "skipped " << s << "\n";
  bool ok = rep_doc["accepted"].get<bool>();

  if (cfg.normal.enabled) {
    const auto dom = in_stage("normal-nbhd", [&] {
      FindDeltaOptions opt;
      opt.sweep_radius = cfg.normal.sweep_radius;
      return find_delta<N>(g, p, cfg.cert, opt);
    });
    const auto conv = in_stage("normal-nbhd", [&] {
      ConvexityOptions opt;
      opt.shooting.integrator = cfg.cert.integrator;
      return verify_convexity<N>(*g, dom, cfg.normal.pairs, cfg.verify.seed, opt);
    });
    write("normal.json", io::dump(io::convexity_to_json<N>(dom, cfg.metric, {conv})));
    log << "normal neighborhood: delta=" << dom.delta << "\n" << io::summary_table({conv});
    ok = ok && conv.ok();
  }
  res.accepted = ok;
  res.exit_code = ok ? 0 : 1;
  log << (ok ? "ACCEPTED" : "REJECTED") << "\n";
  return res;
}

}  // namespace detail

/// certify → mollify (convergence CSV) → verify → optional normal neighborhood.
/// Artifacts: certificate.json, convergence.csv, reports.json, normal.json.
inline PipelineResult run_pipeline(const io::RunConfig& cfg, std::ostream& log) {
  return dispatch_dimension(cfg.metric.dimension, [&](auto n) { return detail::run_pipeline_n<n.value>(cfg, log); });
}

}  // namespace lipexp
