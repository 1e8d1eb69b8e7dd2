#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lipexp/io/config.hpp"
#include "lipexp/totally_normal.hpp"
#include "lipexp/verifier.hpp"

namespace lipexp::io {

inline constexpr const char* kCertificateFormat = "lipexp-certificate";
inline constexpr const char* kReportFormat = "lipexp-report";
inline constexpr const char* kNormalFormat = "lipexp-normal-neighborhood";
inline constexpr int kDocumentVersion = 1;

namespace detail {

// JSON has no inf/nan: non-finite values travel as strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double num_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorKind::ParseError, "expected a number, got " + j.dump());
}

inline double num_at(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::ParseError, std::string("missing field '") + key + "'");
  return num_from(j.at(key));
}

}  // namespace detail

/// 64-bit FNV-1a of a string, as 16 hex digits.
inline std::string fingerprint(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CertificateDocument {
  RadiusCertificate cert;
  MetricDefinition metric;
  CertificateConfig config;
};

inline json certificate_to_json(const RadiusCertificate& c, const MetricDefinition& metric,
                                const CertificateConfig& config) {
  using detail::num;
  json j;
  j["format"] = kCertificateFormat;
  j["version"] = kDocumentVersion;
  j["metric_name"] = c.metric_name;
  j["point"] = c.point;
  j["inputs"] = {{"K1", num(c.K1)},
                 {"K2", num(c.K2)},
                 {"mu", num(c.mu)},
                 {"epsilon0", num(c.epsilon0)},
                 {"bounds_radius", num(c.bounds_radius)},
                 {"k", num(c.k)},
                 {"alpha", num(c.alpha)},
                 {"delta", num(c.delta)},
                 {"b", num(c.b)},
                 {"k_floor_active", c.k_floor_active}};
  j["constants"] = {{"C1", num(c.C1)}, {"C2", num(c.C2)}, {"c1", num(c.c1)},
                    {"c2", num(c.c2)}, {"c3", num(c.c3)}, {"c4", num(c.c4)}};
  j["radii"] = {{"r1", num(c.r1)}, {"r2", num(c.r2)},       {"r3", num(c.r3)},
                {"r4", num(c.r4)}, {"r5", num(c.r5)},       {"r_tilde", num(c.r_tilde)},
                {"r_hat", num(c.r_hat)}, {"r6", num(c.r6)}, {"r7", num(c.r7)}};
  json fam;
  fam["epsilons"] = c.epsilons;
  fam["member_alpha"] = json::array();
  for (double a : c.member_alpha) fam["member_alpha"].push_back(num(a));
  j["family"] = std::move(fam);
  json prov;
  prov["shrink"] = num(c.shrink);
  prov["mv_slack"] = num(c.mv_slack);
  prov["norm_convention"] = c.norm_convention;
  prov["integrator"] = c.integrator;
  prov["kernel_profile"] = c.kernel_profile;
  prov["formulas"] = c.formulas;
  prov["notes"] = c.notes;
  j["provenance"] = std::move(prov);
  j["metric"] = metric_to_json(metric);
  j["config"] = certificate_config_to_json(config);
  return j;
}

/// Schema-checked read; throws ParseError naming the offending field.
inline CertificateDocument certificate_from_json(const json& j) {
  using detail::num_at;
  try {
    if (!j.is_object() || j.value("format", "") != kCertificateFormat)
      throw Error(ErrorKind::ParseError, "not a certificate document");
    if (j.value("version", 0) != kDocumentVersion) throw Error(ErrorKind::ParseError, "unsupported version");
    CertificateDocument d;
    auto& c = d.cert;
    c.metric_name = j.at("metric_name").get<std::string>();
    c.point = j.at("point").get<std::vector<double>>();
    const auto& in = j.at("inputs");
    c.K1 = num_at(in, "K1");
    c.K2 = num_at(in, "K2");
    c.mu = num_at(in, "mu");
    c.epsilon0 = num_at(in, "epsilon0");
    c.bounds_radius = num_at(in, "bounds_radius");
    c.k = num_at(in, "k");
    c.alpha = num_at(in, "alpha");
    c.delta = num_at(in, "delta");
    c.b = num_at(in, "b");
    c.k_floor_active = in.at("k_floor_active").get<bool>();
    const auto& k = j.at("constants");
    c.C1 = num_at(k, "C1");
    c.C2 = num_at(k, "C2");
    c.c1 = num_at(k, "c1");
    c.c2 = num_at(k, "c2");
    c.c3 = num_at(k, "c3");
    c.c4 = num_at(k, "c4");
    const auto& r = j.at("radii");
    c.r1 = num_at(r, "r1");
    c.r2 = num_at(r, "r2");
    c.r3 = num_at(r, "r3");
    c.r4 = num_at(r, "r4");
    c.r5 = num_at(r, "r5");
    c.r_tilde = num_at(r, "r_tilde");
    c.r_hat = num_at(r, "r_hat");
    c.r6 = num_at(r, "r6");
    c.r7 = num_at(r, "r7");
    const auto& fam = j.at("family");
    c.epsilons = fam.at("epsilons").get<std::vector<double>>();
    for (const auto& a : fam.at("member_alpha")) c.member_alpha.push_back(detail::num_from(a));
    const auto& prov = j.at("provenance");
    c.shrink = num_at(prov, "shrink");
    c.mv_slack = num_at(prov, "mv_slack");
    c.norm_convention = prov.at("norm_convention").get<std::string>();
    c.integrator = prov.at("integrator").get<std::string>();
    c.kernel_profile = prov.at("kernel_profile").get<std::string>();
    c.formulas = prov.at("formulas").get<std::map<std::string, std::string>>();
    c.notes = prov.at("notes").get<std::vector<std::string>>();
    d.metric = metric_from_json(j.at("metric"));
    d.config = certificate_config_from_json(j.at("config"));
    if (static_cast<int>(c.point.size()) != d.metric.dimension)
      throw Error(ErrorKind::ParseError, "point dimension does not match the metric");
    const auto bad = c.invariant_violations();
    if (!bad.empty()) throw Error(ErrorKind::ParseError, "certificate invariant violated: " + bad.front());
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("certificate: ") + e.what());
  }
}

inline json report_to_json(const VerificationReport& r) {
  using detail::num;
  json j;
  j["check"] = r.check;
  j["subject"] = r.subject;
  j["samples"] = r.samples;
  j["passed"] = r.passed;
  j["inconclusive"] = r.inconclusive;
  j["violation_count"] = r.violation_count;
  j["worst_margin"] = num(r.worst_margin);
  j["seed"] = r.seed;
  j["certificate"] = r.certificate;
  j["ok"] = r.ok();
  j["violations"] = json::array();
  for (const auto& v : r.violations) {
    json e = {{"index", v.index}, {"margin", num(v.margin)}, {"inputs", json::array()}};
    for (double x : v.inputs) e["inputs"].push_back(num(x));
    j["violations"].push_back(std::move(e));
  }
  j["notes"] = r.notes;
  j["stats"] = json::object();
  for (const auto& [k, v] : r.stats) j["stats"][k] = num(v);
  return j;
}

inline VerificationReport report_from_json(const json& j) {
  try {
    VerificationReport r;
    r.check = j.at("check");
    r.subject = j.at("subject");
    r.samples = j.at("samples");
    r.passed = j.at("passed");
    r.inconclusive = j.at("inconclusive");
    r.violation_count = j.at("violation_count");
    r.worst_margin = detail::num_at(j, "worst_margin");
    r.seed = j.at("seed");
    r.certificate = j.at("certificate");
    for (const auto& e : j.at("violations")) {
      Violation v;
      v.index = e.at("index");
      v.margin = detail::num_at(e, "margin");
      for (const auto& x : e.at("inputs")) v.inputs.push_back(detail::num_from(x));
      r.violations.push_back(std::move(v));
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("stats").items()) r.stats[k] = detail::num_from(v);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report: ") + e.what());
  }
}

inline json reports_document(const std::vector<VerificationReport>& reports, const std::string& certificate_ref) {
  json j;
  j["format"] = kReportFormat;
  j["version"] = kDocumentVersion;
  j["certificate"] = certificate_ref;
  bool ok = true;
  j["reports"] = json::array();
  for (const auto& r : reports) {
    ok = ok && r.ok();
    j["reports"].push_back(report_to_json(r));
  }
  j["accepted"] = ok;
  return j;
}

template <int N>
json convexity_to_json(const ConvexityDomain<N>& d, const MetricDefinition& metric,
                       const std::vector<VerificationReport>& checks) {
  using detail::num;
  json j;
  j["format"] = kNormalFormat;
  j["version"] = kDocumentVersion;
  j["point"] = to_std<N>(d.p);
  j["delta"] = num(d.delta);
  j["delta_prime"] = num(d.delta_prime);
  j["sweep_radius"] = num(d.sweep_radius);
  j["uniform_r"] = num(d.uniform_r);
  j["inner_radius"] = num(d.inner_radius);
  j["search_steps"] = d.search_steps;
  j["W"] = d.w_descriptor();
  j["sweep"] = json::array();
  for (const auto& s : d.sweep)
    j["sweep"].push_back({{"q", to_std<N>(s.q)}, {"r7", num(s.r7)}, {"c3", num(s.c3)}, {"c4", num(s.c4)}, {"mu", num(s.mu)}});
  j["notes"] = d.notes;
  j["verification"] = json::array();
  bool ok = true;
  for (const auto& r : checks) {
    ok = ok && r.ok();
    j["verification"].push_back(report_to_json(r));
  }
  j["accepted"] = ok;
  j["metric"] = metric_to_json(metric);
  return j;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

/// Fixed-width summary table, one row per report.
inline std::string summary_table(const std::vector<VerificationReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-34s %8s %8s %8s %8s %14s  %s\n", "check", "subject", "samples", "passed",
                "incon.", "viol.", "worst_margin", "status");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-14s %-34s %8zu %8zu %8zu %8zu %14.6e  %s\n", r.check.c_str(),
                  r.subject.substr(0, 34).c_str(), r.samples, r.passed, r.inconclusive, r.violation_count,
                  r.worst_margin, r.ok() ? "PASS" : "FAIL");
    os << line;
  }
  return os.str();
}

}  // namespace lipexp::io
