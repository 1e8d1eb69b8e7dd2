#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <toml.hpp>

#include "lipexp/certificate.hpp"
#include "lipexp/io/metric_file.hpp"

namespace lipexp::io {

inline constexpr int kConfigSchema = 1;

struct VerifyConfig {
  std::string suite = "all";  // all | bilip | jacobi | inj | rauch | pullback | speed | none
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  int injectivity_points = 21;
  bool members = true;  // also run bilip/jacobi/pullback on each covered family member
  std::optional<double> rauch_rho, rauch_kappa;
  std::optional<double> rauch_radius;  // default: certificate r1
};

struct NormalConfig {
  bool enabled = false;
  double sweep_radius = 0.05;
  std::size_t pairs = 200;
};

struct RunConfig {
  int schema = kConfigSchema;
  std::string source = "<string>";
  std::string metric_file;  // empty for an inline builtin
  MetricDefinition metric;
  std::vector<double> point;
  CertificateConfig cert;
  int convergence_probes = 9;  // per axis
  VerifyConfig verify;
  NormalConfig normal;
  std::string out_dir = "out";
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const toml::table& root, std::string source) : root_(root), source_(std::move(source)) {}

  [[noreturn]] void fail(const toml::node* node, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (node) os << ":" << node->source().begin.line;
    os << ": " << msg;
    throw Error(ErrorKind::ConfigError, os.str());
  }

  const toml::table* section(const std::string& name) const { return root_[name].as_table(); }

  void check_keys(const toml::table* t, const std::string& where, const std::set<std::string>& allowed) const {
    if (!t) return;
    for (const auto& [k, v] : *t) {
      const std::string key(k.str());
      if (!allowed.count(key)) fail(&v, "unknown key '" + key + "' in " + where);
    }
  }

  template <class T>
  void get(const toml::table* t, const char* key, T& out) const {
    if (!t) return;
    const toml::node* n = t->get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!n->is_boolean()) fail(n, std::string(key) + " must be a boolean");
      out = n->as_boolean()->get();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!n->is_string()) fail(n, std::string(key) + " must be a string");
      out = n->as_string()->get();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!n->is_number()) fail(n, std::string(key) + " must be a number");
      out = n->value<double>().value();
    } else {
      if (!n->is_integer()) fail(n, std::string(key) + " must be an integer");
      const auto v = n->as_integer()->get();
      if (v < 0 && std::is_unsigned_v<T>) fail(n, std::string(key) + " must be non-negative");
      out = static_cast<T>(v);
    }
  }

  template <class T>
  void get(const toml::table* t, const char* key, std::optional<T>& out) const {
    if (!t || !t->get(key)) return;
    T v{};
    get(t, key, v);
    out = v;
  }

  std::vector<double> numbers(const toml::node* n, const char* key) const {
    const auto* arr = n ? n->as_array() : nullptr;
    if (!arr) fail(n, std::string(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      if (!e.is_number()) fail(&e, std::string(key) + " must contain only numbers");
      out.push_back(e.value<double>().value());
    }
    return out;
  }

  // Semantic check tied to the key's line.
  void require(const toml::table* t, const char* key, bool ok, const std::string& msg) const {
    if (ok) return;
    fail(t ? t->get(key) : nullptr, msg);
  }

 private:
  const toml::table& root_;
  std::string source_;
};

}  // namespace detail

/// Parses a run configuration. Relative metric paths resolve against `base_dir`.
inline RunConfig parse_config(std::string_view text, const std::string& source = "<string>",
                              const std::filesystem::path& base_dir = {}) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ": " << e.description();
    throw Error(ErrorKind::ParseError, os.str());
  }
  detail::ConfigReader rd(root, source);
  RunConfig cfg;
  cfg.source = source;

  const std::set<std::string> sections = {"schema", "metric", "point", "mollifier", "certificate",
                                          "integrator", "verify", "normal", "output"};
  for (const auto& [k, v] : root)
    if (!sections.count(std::string(k.str()))) rd.fail(&v, "unknown section or key '" + std::string(k.str()) + "'");
  if (!root.get("schema")) rd.fail(nullptr, "missing 'schema' (expected schema = " + std::to_string(kConfigSchema) + ")");
  if (!root.get("schema")->is_integer() || root["schema"].value<int>() != kConfigSchema)
    rd.fail(root.get("schema"), "unsupported schema version (expected " + std::to_string(kConfigSchema) + ")");
  for (const char* s : {"metric", "point", "mollifier", "certificate", "integrator", "verify", "normal", "output"})
    if (root.get(s) && !root.get(s)->is_table()) rd.fail(root.get(s), std::string("'") + s + "' must be a section");

  // [metric]
  const auto* metric = rd.section("metric");
  if (!metric) rd.fail(nullptr, "missing [metric] section");
  rd.check_keys(metric, "[metric]", {"file", "builtin", "dimension", "params"});
  if (metric->get("file")) {
    if (metric->get("builtin")) rd.fail(metric->get("builtin"), "[metric] takes either 'file' or 'builtin', not both");
    rd.get(metric, "file", cfg.metric_file);
    std::filesystem::path path(cfg.metric_file);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    try {
      cfg.metric = load_metric_file(path.string());
    } catch (const Error& e) {
      rd.fail(metric->get("file"), e.message());
    }
  } else if (metric->get("builtin")) {
    std::string name;
    int dim = 0;
    rd.get(metric, "builtin", name);
    rd.get(metric, "dimension", dim);
    rd.require(metric, "builtin", metric->get("dimension") != nullptr, "[metric] builtin needs 'dimension'");
    rd.require(metric, "dimension", dim >= 2 && dim <= 4, "dimension must be 2, 3 or 4");
    MetricParams params;
    if (const auto* pt = metric->get("params")) {
      if (!pt->is_table()) rd.fail(pt, "params must be a table");
      for (const auto& [k, v] : *pt->as_table()) {
        if (!v.is_number()) rd.fail(&v, "param '" + std::string(k.str()) + "' must be a number");
        params[std::string(k.str())] = v.value<double>().value();
      }
    }
    try {
      cfg.metric = builtin_definition(name, dim, params);
    } catch (const Error& e) {
      rd.fail(metric->get("builtin"), e.message());
    }
  } else {
    rd.fail(nullptr, "[metric] needs 'file' or 'builtin'");
  }

  // [point]
  const auto* point = rd.section("point");
  if (!point) rd.fail(nullptr, "missing [point] section");
  rd.check_keys(point, "[point]", {"coords"});
  cfg.point = rd.numbers(point->get("coords"), "coords");
  rd.require(point, "coords", static_cast<int>(cfg.point.size()) == cfg.metric.dimension,
             "coords needs " + std::to_string(cfg.metric.dimension) + " entries");

  // [mollifier]
  const auto* moll = rd.section("mollifier");
  rd.check_keys(moll, "[mollifier]", {"eps_start", "levels", "resolution", "cache_budget", "probes"});
  rd.get(moll, "eps_start", cfg.cert.eps_start);
  rd.get(moll, "levels", cfg.cert.levels);
  rd.get(moll, "resolution", cfg.cert.resolution);
  rd.get(moll, "cache_budget", cfg.cert.cache_budget);
  rd.get(moll, "probes", cfg.convergence_probes);
  rd.require(moll, "eps_start", cfg.cert.eps_start > 0, "eps_start must be positive");
  rd.require(moll, "levels", cfg.cert.levels >= 1, "levels must be at least 1");
  rd.require(moll, "resolution", cfg.cert.resolution >= 4, "resolution must be at least 4");
  rd.require(moll, "probes", cfg.convergence_probes >= 1, "probes must be positive");

  // [certificate]
  const auto* cert = rd.section("certificate");
  rd.check_keys(cert, "[certificate]",
                {"delta", "b", "shrink", "mv_slack", "alpha_fraction", "k_floor", "lipschitz_safety",
                 "domain_samples", "seed", "bounds_spacing", "bounds_safety"});
  auto& c = cfg.cert;
  rd.get(cert, "delta", c.delta);
  rd.get(cert, "b", c.b);
  rd.get(cert, "shrink", c.shrink);
  rd.get(cert, "mv_slack", c.mv_slack);
  rd.get(cert, "alpha_fraction", c.alpha_fraction);
  rd.get(cert, "k_floor", c.k_floor);
  rd.get(cert, "lipschitz_safety", c.lipschitz_safety);
  rd.get(cert, "domain_samples", c.domain_samples);
  rd.get(cert, "seed", c.seed);
  rd.get(cert, "bounds_spacing", c.bounds_spacing);
  rd.get(cert, "bounds_safety", c.bounds_safety);
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  rd.require(cert, "delta", c.delta > 0, "delta must be positive");
  rd.require(cert, "b", c.b > 1, "b must exceed 1 (got " + num(c.b) + ")");
  rd.require(cert, "shrink", c.shrink > 0 && c.shrink < 1, "shrink must lie in (0, 1) (got " + num(c.shrink) + ")");
  rd.require(cert, "mv_slack", c.mv_slack >= 1, "mv_slack must be at least 1");
  rd.require(cert, "alpha_fraction", c.alpha_fraction > 0 && c.alpha_fraction < 1, "alpha_fraction must lie in (0, 1)");
  rd.require(cert, "k_floor", c.k_floor > 0, "k_floor must be positive");
  rd.require(cert, "lipschitz_safety", c.lipschitz_safety >= 1, "lipschitz_safety must be at least 1");
  rd.require(cert, "bounds_safety", c.bounds_safety >= 1, "bounds_safety must be at least 1");
  rd.require(cert, "domain_samples", c.domain_samples >= 1, "domain_samples must be positive");
  rd.require(cert, "bounds_spacing", c.bounds_spacing > 0 && c.bounds_spacing <= 1, "bounds_spacing must lie in (0, 1]");

  // [integrator]
  const auto* integ = rd.section("integrator");
  rd.check_keys(integ, "[integrator]", {"step", "arc_fraction", "min_steps", "residual_tol", "convergence_tol"});
  auto& is = c.integrator;
  rd.get(integ, "step", is.step);
  rd.get(integ, "arc_fraction", is.arc_fraction);
  rd.get(integ, "min_steps", is.min_steps);
  rd.get(integ, "residual_tol", is.residual_tol);
  rd.get(integ, "convergence_tol", is.convergence_tol);
  rd.require(integ, "step", is.step >= 0, "step must be non-negative (0 = automatic)");
  rd.require(integ, "arc_fraction", is.arc_fraction > 0, "arc_fraction must be positive");
  rd.require(integ, "min_steps", is.min_steps >= 2, "min_steps must be at least 2");
  rd.require(integ, "residual_tol", is.residual_tol > 0, "residual_tol must be positive");
  rd.require(integ, "convergence_tol", is.convergence_tol > 0, "convergence_tol must be positive");

  // [verify]
  const auto* ver = rd.section("verify");
  rd.check_keys(ver, "[verify]",
                {"suite", "samples", "seed", "injectivity_points", "members", "rauch_rho", "rauch_kappa",
                 "rauch_radius"});
  auto& v = cfg.verify;
  rd.get(ver, "suite", v.suite);
  rd.get(ver, "samples", v.samples);
  rd.get(ver, "seed", v.seed);
  rd.get(ver, "injectivity_points", v.injectivity_points);
  rd.get(ver, "members", v.members);
  rd.get(ver, "rauch_rho", v.rauch_rho);
  rd.get(ver, "rauch_kappa", v.rauch_kappa);
  rd.get(ver, "rauch_radius", v.rauch_radius);
  const std::set<std::string> suites = {"all", "bilip", "jacobi", "inj", "rauch", "pullback", "speed", "none"};
  rd.require(ver, "suite", suites.count(v.suite) > 0, "unknown suite '" + v.suite + "'");
  rd.require(ver, "samples", v.samples >= 1, "samples must be positive");
  rd.require(ver, "injectivity_points", v.injectivity_points >= 3, "injectivity_points must be at least 3");
  rd.require(ver, "rauch_kappa", v.rauch_rho.has_value() == v.rauch_kappa.has_value(),
             "rauch_rho and rauch_kappa must be given together");
  if (v.rauch_rho)
    rd.require(ver, "rauch_kappa", *v.rauch_rho <= *v.rauch_kappa, "rauch_rho must not exceed rauch_kappa");
  if (v.rauch_radius) rd.require(ver, "rauch_radius", *v.rauch_radius > 0, "rauch_radius must be positive");

  // [normal]
  const auto* nrm = rd.section("normal");
  rd.check_keys(nrm, "[normal]", {"enabled", "sweep_radius", "pairs"});
  rd.get(nrm, "enabled", cfg.normal.enabled);
  rd.get(nrm, "sweep_radius", cfg.normal.sweep_radius);
  rd.get(nrm, "pairs", cfg.normal.pairs);
  rd.require(nrm, "sweep_radius", cfg.normal.sweep_radius > 0, "sweep_radius must be positive");
  rd.require(nrm, "pairs", cfg.normal.pairs >= 1, "pairs must be positive");

  // [output]
  const auto* out = rd.section("output");
  rd.check_keys(out, "[output]", {"dir"});
  rd.get(out, "dir", cfg.out_dir);
  if (std::filesystem::path(cfg.out_dir).is_relative() && !base_dir.empty())
    cfg.out_dir = (base_dir / cfg.out_dir).lexically_normal().string();

  c.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path, std::filesystem::path(path).parent_path());
}

inline json certificate_config_to_json(const CertificateConfig& c) {
  json j;
  j["delta"] = c.delta;
  j["b"] = c.b;
  j["shrink"] = c.shrink;
  j["mv_slack"] = c.mv_slack;
  j["eps_start"] = c.eps_start;
  j["levels"] = c.levels;
  j["resolution"] = c.resolution;
  j["cache_budget"] = c.cache_budget;
  j["alpha_fraction"] = c.alpha_fraction;
  j["k_floor"] = c.k_floor;
  j["lipschitz_safety"] = c.lipschitz_safety;
  j["domain_samples"] = c.domain_samples;
  j["seed"] = c.seed;
  j["bounds_spacing"] = c.bounds_spacing;
  j["bounds_safety"] = c.bounds_safety;
  const auto& is = c.integrator;
  j["integrator"] = {{"step", is.step},
                     {"arc_fraction", is.arc_fraction},
                     {"min_steps", is.min_steps},
                     {"max_steps", is.max_steps},
                     {"residual_tol", is.residual_tol},
                     {"self_convergence", is.self_convergence},
                     {"convergence_tol", is.convergence_tol}};
  return j;
}

inline CertificateConfig certificate_config_from_json(const json& j) {
  CertificateConfig c;
  try {
    c.delta = j.at("delta");
    c.b = j.at("b");
    c.shrink = j.at("shrink");
    c.mv_slack = j.at("mv_slack");
    c.eps_start = j.at("eps_start");
    c.levels = j.at("levels");
    c.resolution = j.at("resolution");
    c.cache_budget = j.at("cache_budget");
    c.alpha_fraction = j.at("alpha_fraction");
    c.k_floor = j.at("k_floor");
    c.lipschitz_safety = j.at("lipschitz_safety");
    c.domain_samples = j.at("domain_samples");
    c.seed = j.at("seed");
    c.bounds_spacing = j.at("bounds_spacing");
    c.bounds_safety = j.at("bounds_safety");
    const auto& is = j.at("integrator");
    c.integrator.step = is.at("step");
    c.integrator.arc_fraction = is.at("arc_fraction");
    c.integrator.min_steps = is.at("min_steps");
    c.integrator.max_steps = is.at("max_steps");
    c.integrator.residual_tol = is.at("residual_tol");
    c.integrator.self_convergence = is.at("self_convergence");
    c.integrator.convergence_tol = is.at("convergence_tol");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("certificate config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace lipexp::io
