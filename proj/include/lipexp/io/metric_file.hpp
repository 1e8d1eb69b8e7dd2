#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lipexp/builtin_metrics.hpp"
#include "lipexp/grid_metric.hpp"

namespace lipexp::io {

using nlohmann::json;

inline constexpr const char* kMetricFormat = "lipexp-metric";
inline constexpr int kMetricVersion = 1;

/// Parsed metric-definition document (see README for the schema).
struct MetricDefinition {
  int dimension = 2;
  Signature signature{2, 0};
  std::string kind = "builtin";  // builtin | grid
  std::string name;
  MetricParams params;
  // grid kind
  std::vector<double> origin, spacing;
  std::vector<int> shape;
  std::map<std::string, std::vector<double>> components;  // "g11", "g12", ... (1-based, i ≤ j)
};

inline std::string component_key(int i, int j) {
  if (i > j) std::swap(i, j);
  return "g" + std::to_string(i + 1) + std::to_string(j + 1);
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) parse_fail(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    parse_fail(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline MetricDefinition metric_from_json(const json& j) {
  using detail::field;
  const std::string where = "metric definition";
  if (!j.is_object()) detail::parse_fail(where + ": expected an object");
  if (j.contains("format") && j["format"] != kMetricFormat) detail::parse_fail(where + ": unknown format");
  if (j.contains("version") && j["version"] != kMetricVersion)
    detail::parse_fail(where + ": unsupported version " + j["version"].dump());
  MetricDefinition d;
  d.dimension = field<int>(j, "dimension", where);
  if (d.dimension < 2 || d.dimension > 4) detail::parse_fail(where + ": dimension must be 2, 3 or 4");
  const auto sig = field<std::vector<int>>(j, "signature", where);
  if (sig.size() != 2 || sig[0] < 0 || sig[1] < 0 || sig[0] + sig[1] != d.dimension)
    detail::parse_fail(where + ": signature must be [p, q] with p + q = dimension");
  d.signature = {sig[0], sig[1]};
  d.kind = field<std::string>(j, "kind", where);
  d.name = j.value("name", std::string{});
  if (d.kind == "builtin") {
    if (d.name.empty()) detail::parse_fail(where + ": builtin metrics need a name");
    if (j.contains("params")) {
      if (!j["params"].is_object()) detail::parse_fail(where + ": params must be an object");
      for (const auto& [k, v] : j["params"].items()) {
        if (!v.is_number()) detail::parse_fail(where + ": param '" + k + "' must be a number");
        d.params[k] = v.get<double>();
      }
    }
  } else if (d.kind == "grid") {
    if (d.name.empty()) d.name = "grid";
    if (!j.contains("grid") || !j["grid"].is_object()) detail::parse_fail(where + ": grid metrics need a 'grid' block");
    const json& g = j["grid"];
    d.origin = field<std::vector<double>>(g, "origin", "grid");
    d.spacing = field<std::vector<double>>(g, "spacing", "grid");
    d.shape = field<std::vector<int>>(g, "shape", "grid");
    const auto n = static_cast<std::size_t>(d.dimension);
    if (d.origin.size() != n || d.spacing.size() != n || d.shape.size() != n)
      detail::parse_fail("grid: origin, spacing and shape need one entry per dimension");
    std::size_t nodes = 1;
    for (std::size_t a = 0; a < n; ++a) {
      if (!(d.spacing[a] > 0)) detail::parse_fail("grid: spacing must be positive");
      if (d.shape[a] < 4) detail::parse_fail("grid: shape needs at least 4 nodes per axis");
      nodes *= static_cast<std::size_t>(d.shape[a]);
    }
    if (!g.contains("components") || !g["components"].is_object()) detail::parse_fail("grid: missing 'components'");
    for (int i = 0; i < d.dimension; ++i)
      for (int k = i; k < d.dimension; ++k) {
        const std::string key = component_key(i, k);
        auto v = field<std::vector<double>>(g["components"], key.c_str(), "grid.components");
        if (v.size() != nodes)
          detail::parse_fail("grid.components." + key + ": expected " + std::to_string(nodes) + " values, got " +
                             std::to_string(v.size()));
        d.components[key] = std::move(v);
      }
  } else {
    detail::parse_fail(where + ": kind must be 'builtin' or 'grid'");
  }
  return d;
}

inline json metric_to_json(const MetricDefinition& d) {
  json j;
  j["format"] = kMetricFormat;
  j["version"] = kMetricVersion;
  j["dimension"] = d.dimension;
  j["signature"] = {d.signature.positive, d.signature.negative};
  j["kind"] = d.kind;
  j["name"] = d.name;
  if (d.kind == "builtin") {
    j["params"] = json::object();
    for (const auto& [k, v] : d.params) j["params"][k] = v;
  } else {
    json g;
    g["origin"] = d.origin;
    g["spacing"] = d.spacing;
    g["shape"] = d.shape;
    g["components"] = json::object();
    for (const auto& [k, v] : d.components) g["components"][k] = v;
    j["grid"] = std::move(g);
  }
  return j;
}

inline MetricDefinition load_metric_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open metric file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  try {
    return metric_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.message());
  }
}

/// Builtin definition without a file.
inline MetricDefinition builtin_definition(const std::string& name, int dimension, const MetricParams& params = {}) {
  MetricDefinition d;
  d.dimension = dimension;
  d.kind = "builtin";
  d.name = name;
  d.params = params;
  switch (dimension) {
    case 2: d.signature = make_builtin<2>(name, params)->signature(); break;
    case 3: d.signature = make_builtin<3>(name, params)->signature(); break;
    case 4: d.signature = make_builtin<4>(name, params)->signature(); break;
    default: throw Error(ErrorKind::InvalidArgument, "dimension must be 2, 3 or 4");
  }
  return d;
}

template <int N>
MetricPtr<N> build_metric(const MetricDefinition& d) {
  if (d.dimension != N) throw Error(ErrorKind::InvalidArgument, "metric dimension mismatch");
  if (d.kind == "builtin") {
    MetricPtr<N> m = make_builtin<N>(d.name, d.params);
    if (!(m->signature() == d.signature))
      throw Error(ErrorKind::SignatureMismatch, "declared signature does not match builtin '" + d.name + "'");
    return m;
  }
  GridLayout<N> layout;
  for (int a = 0; a < N; ++a) {
    layout.origin[a] = d.origin[a];
    layout.spacing[a] = d.spacing[a];
    layout.shape[a] = d.shape[a];
  }
  constexpr int kC = sym_count(N);
  const std::size_t nodes = layout.node_count();
  std::vector<double> data(nodes * kC);
  for (int i = 0; i < N; ++i)
    for (int k = i; k < N; ++k) {
      const auto& comp = d.components.at(component_key(i, k));
      for (std::size_t f = 0; f < nodes; ++f) data[f * kC + sym_index(N, i, k)] = comp[f];
    }
  auto m = std::make_shared<GridMetric<N>>(d.name, d.signature, layout, GridMetric<N>::Derivatives::None,
                                           std::move(data));
  // signature check at every node
  for (std::size_t f = 0; f < nodes; ++f) {
    Mat<N> g;
    for (int i = 0; i < N; ++i)
      for (int k = i; k < N; ++k) g(i, k) = g(k, i) = m->data()[f * kC + sym_index(N, i, k)];
    Signature s;
    try {
      s = signature_of<N>(g);
    } catch (const Error&) {
      throw Error(ErrorKind::SingularMetric, "grid metric degenerate at node " + std::to_string(f));
    }
    if (!(s == d.signature))
      throw Error(ErrorKind::SignatureMismatch, "grid metric signature differs at node " + std::to_string(f));
  }
  return m;
}

/// Samples a metric on a grid and returns the corresponding grid definition.
template <int N>
MetricDefinition sample_to_grid(const MetricField<N>& metric, const GridLayout<N>& layout, const std::string& name) {
  MetricDefinition d;
  d.dimension = N;
  d.signature = metric.signature();
  d.kind = "grid";
  d.name = name;
  for (int a = 0; a < N; ++a) {
    d.origin.push_back(layout.origin[a]);
    d.spacing.push_back(layout.spacing[a]);
    d.shape.push_back(layout.shape[a]);
  }
  const std::size_t nodes = layout.node_count();
  for (int i = 0; i < N; ++i)
    for (int k = i; k < N; ++k) d.components[component_key(i, k)].resize(nodes);
  std::array<int, N> idx{};
  for (std::size_t f = 0; f < nodes; ++f) {
    const Mat<N> g = metric.g(layout.position(idx));
    for (int i = 0; i < N; ++i)
      for (int k = i; k < N; ++k) d.components[component_key(i, k)][f] = g(i, k);
    int a = N - 1;
    while (a >= 0 && ++idx[a] >= layout.shape[a]) idx[a--] = 0;
  }
  return d;
}

}  // namespace lipexp::io
