#pragma once

#include <vector>

#include "lipexp/metric_field.hpp"

namespace lipexp {

/// Uniform grid: node i sits at origin + i·spacing (componentwise), with
/// row-major node ordering (last axis fastest).
template <int N>
struct GridLayout {
  Vec<N> origin = Vec<N>::Zero();
  Vec<N> spacing = Vec<N>::Ones();
  std::array<int, N> shape{};

  std::size_t node_count() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }
  std::size_t flat(const std::array<int, N>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < N; ++a) f = f * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(idx[a]);
    return f;
  }
  Vec<N> position(const std::array<int, N>& idx) const {
    Vec<N> x;
    for (int a = 0; a < N; ++a) x[a] = origin[a] + idx[a] * spacing[a];
    return x;
  }
  /// Points with a full 4-node interpolation stencil.
  ChartDomain<N> interior() const {
    Vec<N> lo, hi;
    for (int a = 0; a < N; ++a) {
      lo[a] = origin[a] + spacing[a];
      hi[a] = origin[a] + (shape[a] - 2) * spacing[a];
    }
    return ChartDomain<N>::box(lo, hi);
  }
};

namespace detail {

// Catmull–Rom weights for nodes i−1..i+2 at fractional offset t ∈ [0, 1].
inline void catmull_rom(double t, double w[4], double dw[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
  dw[0] = 0.5 * (-3 * t2 + 4 * t - 1);
  dw[1] = 0.5 * (9 * t2 - 10 * t);
  dw[2] = 0.5 * (-9 * t2 + 8 * t + 1);
  dw[3] = 0.5 * (3 * t2 - 2 * t);
}

}  // namespace detail

/// Grid-sampled metric with tensor-product Catmull–Rom interpolation (C¹).
///
/// Each node stores `fields_per_node` doubles. With `Derivatives::None` the
/// node holds the N(N+1)/2 packed components of g and first derivatives come
/// from differentiating the interpolant. With `Derivatives::UpToSecond` the
/// node additionally holds ∂_a g (N blocks) and ∂_a∂_b g (a ≤ b, N(N+1)/2
/// blocks), each interpolated on its own; such a metric has curvature access.
template <int N>
class GridMetric final : public MetricField<N> {
 public:
  enum class Derivatives { None, UpToSecond };
  static constexpr int kComponents = sym_count(N);

  GridMetric(std::string name, Signature sig, GridLayout<N> layout, Derivatives derivs,
             std::vector<double> data)
      : MetricField<N>(std::move(name), sig, layout.interior()),
        layout_(std::move(layout)),
        derivs_(derivs),
        data_(std::move(data)) {
    for (int a = 0; a < N; ++a)
      if (layout_.shape[a] < 4) throw Error(ErrorKind::InvalidArgument, "grid needs at least 4 nodes per axis");
    if (data_.size() != layout_.node_count() * fields_per_node())
      throw Error(ErrorKind::InvalidArgument, "grid data size does not match layout");
  }

  static constexpr int fields_for(Derivatives d) {
    return d == Derivatives::None ? kComponents : kComponents * (1 + N + sym_count(N));
  }
  int fields_per_node() const { return fields_for(derivs_); }

  const GridLayout<N>& layout() const { return layout_; }
  const std::vector<double>& data() const { return data_; }
  Derivatives derivatives() const { return derivs_; }

  Regularity regularity() const override { return Regularity::GridSampled; }
  int max_order() const override { return derivs_ == Derivatives::None ? 1 : 2; }

 protected:
  MetricJet<N> evaluate(const Vec<N>& x, int order) const override {
    std::array<int, N> base;
    double w[N][4], dw[N][4];
    for (int a = 0; a < N; ++a) {
      const double u = (x[a] - layout_.origin[a]) / layout_.spacing[a];
      int i = static_cast<int>(std::floor(u));
      i = std::clamp(i, 1, layout_.shape[a] - 3);
      base[a] = i - 1;
      detail::catmull_rom(u - i, w[a], dw[a]);
    }
    const int fields = fields_per_node();
    const bool need_grad = derivs_ == Derivatives::None && order >= 1;
    // accumulate interpolated fields (and, for raw grids, their gradient)
    std::array<double, fields_for(Derivatives::UpToSecond)> acc{};
    std::array<std::array<double, kComponents>, N> grad{};
    std::array<int, N> s{};
    for (;;) {
      double weight = 1.0;
      std::array<int, N> node;
      for (int a = 0; a < N; ++a) {
        weight *= w[a][s[a]];
        node[a] = base[a] + s[a];
      }
      const double* src = data_.data() + layout_.flat(node) * static_cast<std::size_t>(fields);
      const int used = derivs_ == Derivatives::None ? kComponents : (order >= 2 ? fields : kComponents * (1 + N));
      for (int f = 0; f < used; ++f) acc[f] += weight * src[f];
      if (need_grad) {
        for (int d = 0; d < N; ++d) {
          double wd = 1.0;
          for (int a = 0; a < N; ++a) wd *= (a == d ? dw[a][s[a]] / layout_.spacing[a] : w[a][s[a]]);
          for (int c = 0; c < kComponents; ++c) grad[d][c] += wd * src[c];
        }
      }
      int a = N - 1;
      while (a >= 0 && ++s[a] > 3) s[a--] = 0;
      if (a < 0) break;
    }

    MetricJet<N> j;
    unpack(acc.data(), j.g);
    if (order >= 1) {
      for (int d = 0; d < N; ++d) {
        if (need_grad) unpack(grad[d].data(), j.dg[d]);
        else unpack(acc.data() + kComponents * (1 + d), j.dg[d]);
      }
    }
    if (order >= 2) {
      for (int a = 0; a < N; ++a)
        for (int b = a; b < N; ++b) {
          unpack(acc.data() + kComponents * (1 + N + sym_index(N, a, b)), j.d2g[a][b]);
          j.d2g[b][a] = j.d2g[a][b];
        }
    }
    return j;
  }

 private:
  static void unpack(const double* packed, Mat<N>& m) {
    for (int i = 0; i < N; ++i)
      for (int k = i; k < N; ++k) m(i, k) = m(k, i) = packed[sym_index(N, i, k)];
  }

  GridLayout<N> layout_;
  Derivatives derivs_;
  std::vector<double> data_;
};

}  // namespace lipexp
