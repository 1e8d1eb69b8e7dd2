// lipexp command-line front end.
//
// Exit status: 0 success, 1 a verification check failed, 2 usage/config/parse
// or numerical error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lipexp/lipexp.hpp"

namespace {

using namespace lipexp;
using io::json;

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

std::vector<double> parse_coords(const std::string& text, const char* what) {
  std::string s = text;
  for (char& ch : s)
    if (ch == ',' || ch == ';') ch = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": bad number '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": no coordinates");
  return out;
}

template <int N>
Vec<N> coords_vec(const std::string& text, const char* what) {
  const auto v = parse_coords(text, what);
  if (static_cast<int>(v.size()) != N)
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " needs " + std::to_string(N) + " coordinates");
  return to_vec<N>(v);
}

// --metric takes a metric file or "builtin:NAME".
struct MetricArgs {
  std::string spec;
  int dim = 0;
  std::vector<std::string> params;

  void add(CLI::App* app) {
    app->add_option("--metric", spec, "metric file (JSON) or builtin:NAME")->required();
    app->add_option("--dim", dim, "dimension for builtin metrics (default: catalog default)");
    app->add_option("--param", params, "builtin parameter key=value (repeatable)");
  }

  io::MetricDefinition load() const {
    if (spec.rfind("builtin:", 0) != 0) return io::load_metric_file(spec);
    const std::string name = spec.substr(8);
    int d = dim;
    if (d == 0) {
      for (const auto& e : builtin_catalog())
        if (e.name == name) d = e.default_dimension;
      if (d == 0) throw Error(ErrorKind::InvalidArgument, "unknown builtin metric '" + name + "'");
    }
    MetricParams mp;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--param needs key=value");
      mp[kv.substr(0, eq)] = parse_coords(kv.substr(eq + 1), "--param").at(0);
    }
    return io::builtin_definition(name, d, mp);
  }
};

struct CertArgs {
  CertificateConfig cfg;
  std::string config_file;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "run config (TOML); its certificate settings are used");
    app->add_option("--delta", cfg.delta, "comparison-bound delta")->capture_default_str();
    app->add_option("--b", cfg.b, "comparison-bound horizon b > 1")->capture_default_str();
    app->add_option("--shrink", cfg.shrink, "strict-inequality shrink factor")->capture_default_str();
    app->add_option("--mv-slack", cfg.mv_slack, "mean-value slack for c4")->capture_default_str();
    app->add_option("--eps-start", cfg.eps_start, "largest mollification radius")->capture_default_str();
    app->add_option("--levels", cfg.levels, "number of eps-halvings")->capture_default_str();
  }
  CertificateConfig resolve() const {
    if (config_file.empty()) {
      cfg.validate();
      return cfg;
    }
    return io::load_config(config_file).cert;
  }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    io::write_text(path, text);
}

int cmd_catalog(bool as_json) {
  if (as_json) {
    json j = json::array();
    for (const auto& e : builtin_catalog())
      j.push_back({{"name", e.name},
                   {"description", e.description},
                   {"dimensions", e.dimensions},
                   {"regularity", e.regularity},
                   {"default_dimension", e.default_dimension}});
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  for (const auto& e : builtin_catalog()) {
    std::string dims;
    for (int d : e.dimensions) dims += (dims.empty() ? "" : ",") + std::to_string(d);
    std::printf("%-14s dims=%-6s %-16s %s\n", e.name.c_str(), dims.c_str(), e.regularity.c_str(),
                e.description.c_str());
  }
  return 0;
}

int cmd_certify(const MetricArgs& m, const std::string& point, const CertArgs& ca, const std::string& out,
                bool verify, const io::VerifyConfig& vc, const std::string& report_out) {
  const auto def = m.load();
  const CertificateConfig cfg = ca.resolve();
  return dispatch_dimension(def.dimension, [&](auto n) -> int {
    constexpr int N = decltype(n)::value;
    const auto g = io::build_metric<N>(def);
    const Vec<N> p = coords_vec<N>(point, "--point");
    const auto run = full_certificate<N>(g, p, cfg);
    const std::string text = io::dump(io::certificate_to_json(run.cert, def, cfg));
    const std::string ref = io::fingerprint(text);
    write_or_print(out, text);
    std::cerr << "certificate " << ref << ": mu=" << run.cert.mu << " r7=" << run.cert.r7 << " c3=" << run.cert.c3
              << " c4=" << run.cert.c4 << "\n";
    if (!verify) return 0;
    std::vector<std::string> skipped;
    const auto reports = run_suite<N>(g, run.cert, run.covered(), vc, cfg.integrator, ref, &skipped);
    json doc = io::reports_document(reports, ref);
    doc["skipped"] = skipped;
    if (!report_out.empty()) io::write_text(report_out, io::dump(doc));
    std::cout << io::summary_table(reports);
    const bool ok = doc["accepted"].get<bool>();
    std::cout << (ok ? "ACCEPTED" : "REJECTED") << "\n";
    return ok ? 0 : kExitFailedCheck;
  });
}

int cmd_verify(const std::string& cert_path, const io::VerifyConfig& vc, const std::string& out) {
  const json cj = io::read_json_file(cert_path);
  const auto doc = io::certificate_from_json(cj);
  const std::string ref = io::fingerprint(io::dump(cj));
  return dispatch_dimension(doc.metric.dimension, [&](auto n) -> int {
    constexpr int N = decltype(n)::value;
    const auto g = io::build_metric<N>(doc.metric);
    const Vec<N> p = to_vec<N>(doc.cert.point);
    const auto family = certificate_family<N>(g, p, doc.config);
    const auto members = covered_members<N>(family, doc.cert.epsilon0);
    std::vector<std::string> skipped;
    const auto reports = run_suite<N>(g, doc.cert, members, vc, doc.config.integrator, ref, &skipped);
    json rep = io::reports_document(reports, ref);
    rep["skipped"] = skipped;
    if (!out.empty()) io::write_text(out, io::dump(rep));
    std::cout << io::summary_table(reports);
    for (const auto& s : skipped) std::cout << "skipped " << s << "\n";
    const bool ok = rep["accepted"].get<bool>();
    std::cout << (ok ? "ACCEPTED" : "REJECTED") << "\n";
    return ok ? 0 : kExitFailedCheck;
  });
}

IntegratorSettings settings_with_step(double step) {
  IntegratorSettings s;
  s.step = step;
  return s;
}

int cmd_geodesic(const MetricArgs& m, const std::string& point, const std::string& velocity, double t_max,
                 double step, const std::string& out) {
  const auto def = m.load();
  return dispatch_dimension(def.dimension, [&](auto n) -> int {
    constexpr int N = decltype(n)::value;
    const auto g = io::build_metric<N>(def);
    const auto path = integrate_geodesic<N>(*g, coords_vec<N>(point, "--point"), coords_vec<N>(velocity, "--velocity"),
                                            t_max, settings_with_step(step));
    std::ostringstream os;
    os.precision(17);
    os << "t";
    for (int a = 0; a < N; ++a) os << ",c" << a + 1;
    for (int a = 0; a < N; ++a) os << ",y" << a + 1;
    os << ",energy\n";
    for (const auto& s : path.samples) {
      os << s.t;
      for (int a = 0; a < N; ++a) os << ',' << s.c[a];
      for (int a = 0; a < N; ++a) os << ',' << s.y[a];
      os << ',' << energy<N>(*g, s) << '\n';
    }
    write_or_print(out, os.str());
    std::cerr << "steps=" << path.samples.size() - 1 << " error_estimate=" << path.error_estimate << "\n";
    return 0;
  });
}

int cmd_jacobi(const MetricArgs& m, const std::string& point, const std::string& velocity, const std::string& j0,
               const std::string& dj0, double t_max, double step, double eps, double resolution,
               const std::string& out) {
  const auto def = m.load();
  return dispatch_dimension(def.dimension, [&](auto n) -> int {
    constexpr int N = decltype(n)::value;
    MetricPtr<N> g = io::build_metric<N>(def);
    const Vec<N> p = coords_vec<N>(point, "--point");
    if (eps > 0) {
      const auto kernel = build_kernel<N>(eps, eps / resolution, bump_profile<N>());
      g = std::make_shared<const MollifiedMetric<N>>(g, std::make_shared<const MollifierKernel<N>>(kernel), nullptr);
    }
    const auto path = integrate_geodesic<N>(*g, p, coords_vec<N>(velocity, "--velocity"), t_max, settings_with_step(step));
    const auto sol = jacobi_field<N>(*g, path, coords_vec<N>(j0, "--j0"), coords_vec<N>(dj0, "--dj0"));
    std::ostringstream os;
    os.precision(17);
    os << "s";
    for (int a = 0; a < N; ++a) os << ",J" << a + 1;
    for (int a = 0; a < N; ++a) os << ",DJ" << a + 1;
    os << ",norm_J,norm_DJ\n";
    for (const auto& s : sol.samples) {
      os << s.s;
      for (int a = 0; a < N; ++a) os << ',' << s.J[a];
      for (int a = 0; a < N; ++a) os << ',' << s.D[a];
      os << ',' << s.J.norm() << ',' << s.D.norm() << '\n';
    }
    write_or_print(out, os.str());
    std::cerr << "samples=" << sol.samples.size() << " error_estimate=" << sol.error_estimate << "\n";
    return 0;
  });
}

int cmd_mollify(const MetricArgs& m, const std::string& point, double eps_start, int levels, double resolution,
                double half_width, int probes, const std::string& out) {
  const auto def = m.load();
  return dispatch_dimension(def.dimension, [&](auto n) -> int {
    constexpr int N = decltype(n)::value;
    const auto g = io::build_metric<N>(def);
    const Vec<N> p = coords_vec<N>(point, "--point");
    const auto fam = build_family<N>(g, Box<N>::centered(p, half_width), eps_start, levels, resolution);
    const auto rep = convergence_report<N>(fam, Box<N>::centered(p, half_width), probes);
    std::ostringstream os;
    rep.write_csv(os);
    write_or_print(out, os.str());
    std::cerr << "c1_monotone=" << (rep.c1_monotone ? "yes" : "no") << " uniform_d2=" << rep.uniform_d2 << "\n";
    return 0;
  });
}

int cmd_normal(const MetricArgs& m, const std::string& point, const CertArgs& ca, double sweep_radius,
               std::size_t pairs, std::uint64_t seed, const std::string& out) {
  const auto def = m.load();
  const CertificateConfig cfg = ca.resolve();
  return dispatch_dimension(def.dimension, [&](auto n) -> int {
    constexpr int N = decltype(n)::value;
    const auto g = io::build_metric<N>(def);
    FindDeltaOptions opt;
    opt.sweep_radius = sweep_radius;
    const auto dom = find_delta<N>(g, coords_vec<N>(point, "--point"), cfg, opt);
    ConvexityOptions copt;
    copt.shooting.integrator = cfg.integrator;
    const auto rep = verify_convexity<N>(*g, dom, pairs, seed, copt);
    write_or_print(out, io::dump(io::convexity_to_json<N>(dom, def, {rep})));
    std::cerr << "delta=" << dom.delta << " uniform_r=" << dom.uniform_r << "\n" << io::summary_table({rep});
    return rep.ok() ? 0 : kExitFailedCheck;
  });
}

void add_verify_options(CLI::App* app, io::VerifyConfig& vc) {
  app->add_option("--suite", vc.suite, "all|bilip|jacobi|inj|rauch|pullback|speed")
      ->check(CLI::IsMember({"all", "bilip", "jacobi", "inj", "rauch", "pullback", "speed"}))
      ->capture_default_str();
  app->add_option("--samples", vc.samples, "samples per check")->capture_default_str();
  app->add_option("--seed", vc.seed, "RNG seed")->capture_default_str();
  app->add_option("--inj-points", vc.injectivity_points, "injectivity grid points per axis")->capture_default_str();
  app->add_option("--rauch-rho", vc.rauch_rho, "lower sectional-curvature bound");
  app->add_option("--rauch-kappa", vc.rauch_kappa, "upper sectional-curvature bound");
  app->add_option("--rauch-radius", vc.rauch_radius, "Rauch check radius (default r1)");
  app->add_flag("!--no-members", vc.members, "skip the mollified family members");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lipexp: bi-Lipschitz certificates for the exponential map of C^{1,1} metrics.\n"
               "Worker threads: set LIPEXP_WORKERS (default: hardware concurrency)."};
  app.require_subcommand(1);

  bool catalog_json = false;
  auto* catalog = app.add_subcommand("catalog", "list builtin metrics");
  catalog->add_flag("--json", catalog_json, "JSON output");

  MetricArgs cm;
  CertArgs cc;
  std::string c_point, c_out, c_report;
  bool c_verify = false;
  io::VerifyConfig c_vc;
  auto* certify = app.add_subcommand("certify", "compute a radius certificate");
  cm.add(certify);
  cc.add(certify);
  certify->add_option("--point", c_point, "base point, comma separated")->required();
  certify->add_option("--out", c_out, "certificate file (default stdout)");
  certify->add_flag("--verify", c_verify, "run the verification suite and reject on failure");
  certify->add_option("--report", c_report, "verification report file (with --verify)");
  add_verify_options(certify, c_vc);

  std::string v_cert, v_out;
  io::VerifyConfig v_vc;
  auto* verify = app.add_subcommand("verify", "run sampled checks against a certificate");
  verify->add_option("--cert", v_cert, "certificate file")->required()->check(CLI::ExistingFile);
  verify->add_option("--out", v_out, "report file (JSON)");
  add_verify_options(verify, v_vc);

  MetricArgs gm;
  std::string g_point, g_vel, g_out;
  double g_tmax = 1.0, g_step = 0.0;
  auto* geodesic = app.add_subcommand("geodesic", "integrate a geodesic, CSV t,c,y,energy");
  gm.add(geodesic);
  geodesic->add_option("--point", g_point, "start point")->required();
  geodesic->add_option("--velocity", g_vel, "initial velocity")->required();
  geodesic->add_option("--tmax", g_tmax, "final time")->capture_default_str();
  geodesic->add_option("--step", g_step, "step size (0 = automatic)")->capture_default_str();
  geodesic->add_option("--out", g_out, "CSV file (default stdout)");

  MetricArgs jm;
  std::string j_point, j_vel, j_j0, j_dj0, j_out;
  double j_tmax = 1.0, j_step = 0.0, j_eps = 0.0, j_res = 6.0;
  auto* jacobi = app.add_subcommand("jacobi", "integrate a Jacobi field, CSV s,J,DJ,norm_J,norm_DJ");
  jm.add(jacobi);
  jacobi->add_option("--point", j_point, "start point")->required();
  jacobi->add_option("--velocity", j_vel, "geodesic initial velocity")->required();
  jacobi->add_option("--j0", j_j0, "J(0)")->required();
  jacobi->add_option("--dj0", j_dj0, "covariant derivative of J at 0")->required();
  jacobi->add_option("--tmax", j_tmax, "final time")->capture_default_str();
  jacobi->add_option("--step", j_step, "step size (0 = automatic)")->capture_default_str();
  jacobi->add_option("--eps", j_eps, "mollify first with this radius (needed for C^{1,1} metrics)");
  jacobi->add_option("--resolution", j_res, "eps / kernel grid spacing")->capture_default_str();
  jacobi->add_option("--out", j_out, "CSV file (default stdout)");

  MetricArgs mm;
  std::string m_point, m_out;
  double m_eps = 0.08, m_res = 6.0, m_half = 0.1;
  int m_levels = 5, m_probes = 9;
  auto* mollify_cmd = app.add_subcommand("mollify", "mollified family convergence, CSV epsilon,sup_c0,sup_c1,sup_d2");
  mm.add(mollify_cmd);
  mollify_cmd->add_option("--point", m_point, "region center")->required();
  mollify_cmd->add_option("--eps-start", m_eps, "largest radius")->capture_default_str();
  mollify_cmd->add_option("--levels", m_levels, "number of halvings")->capture_default_str();
  mollify_cmd->add_option("--resolution", m_res, "eps / kernel grid spacing")->capture_default_str();
  mollify_cmd->add_option("--half-width", m_half, "half-width of the probed box")->capture_default_str();
  mollify_cmd->add_option("--probes", m_probes, "probe points per axis")->capture_default_str();
  mollify_cmd->add_option("--out", m_out, "CSV file (default stdout)");

  MetricArgs nm;
  CertArgs nc;
  std::string n_point, n_out;
  double n_sweep = 0.05;
  std::size_t n_pairs = 200;
  std::uint64_t n_seed = 1;
  auto* normal = app.add_subcommand("normal-nbhd", "find delta for a totally normal neighborhood");
  nm.add(normal);
  nc.add(normal);
  normal->add_option("--point", n_point, "center")->required();
  normal->add_option("--out", n_out, "output document (default stdout)");
  normal->add_option("--sweep-radius", n_sweep, "base-point sweep radius")->capture_default_str();
  normal->add_option("--pairs", n_pairs, "convexity pairs")->capture_default_str();
  normal->add_option("--seed", n_seed, "RNG seed")->capture_default_str();

  std::string r_config;
  auto* run = app.add_subcommand("run", "full pipeline from a config file");
  run->add_option("--config", r_config, "TOML config")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*catalog) return cmd_catalog(catalog_json);
    if (*certify) return cmd_certify(cm, c_point, cc, c_out, c_verify, c_vc, c_report);
    if (*verify) return cmd_verify(v_cert, v_vc, v_out);
    if (*geodesic) return cmd_geodesic(gm, g_point, g_vel, g_tmax, g_step, g_out);
    if (*jacobi) return cmd_jacobi(jm, j_point, j_vel, j_j0, j_dj0, j_tmax, j_step, j_eps, j_res, j_out);
    if (*mollify_cmd) return cmd_mollify(mm, m_point, m_eps, m_levels, m_res, m_half, m_probes, m_out);
    if (*normal) return cmd_normal(nm, n_point, nc, n_sweep, n_pairs, n_seed, n_out);
    if (*run) {
      const auto cfg = io::load_config(r_config);
      return run_pipeline(cfg, std::cout).exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "lipexp: error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "lipexp: error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
