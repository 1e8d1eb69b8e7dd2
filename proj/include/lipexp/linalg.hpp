#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "lipexp/error.hpp"

namespace lipexp {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

// Γ^k_ij stored as gamma[k](i, j).
template <int N>
using Christoffel = std::array<Mat<N>, N>;

/// R^l_{kij} with the convention R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l and
/// R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z.
template <int N>
struct Riemann {
  std::array<double, N * N * N * N> data{};

  double& operator()(int l, int k, int i, int j) { return data[((l * N + k) * N + i) * N + j]; }
  double operator()(int l, int k, int i, int j) const { return data[((l * N + k) * N + i) * N + j]; }

  // (R(u, v) w)^l = R^l_{kij} w^k u^i v^j
  Vec<N> apply(const Vec<N>& u, const Vec<N>& v, const Vec<N>& w) const {
    Vec<N> out = Vec<N>::Zero();
    for (int l = 0; l < N; ++l) {
      double acc = 0.0;
      for (int k = 0; k < N; ++k)
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) acc += (*this)(l, k, i, j) * w[k] * u[i] * v[j];
      out[l] = acc;
    }
    return out;
  }
};

template <int N>
Vec<N> contract(const Christoffel<N>& gamma, const Vec<N>& a, const Vec<N>& b) {
  Vec<N> out;
  for (int k = 0; k < N; ++k) out[k] = a.dot(gamma[k] * b);
  return out;
}

/// Spectral norm of a row-major matrix with `rows` rows, given as a flat
/// buffer. Computed from the largest eigenvalue of M Mᵀ (rows × rows).
inline double flattened_spectral_norm(const double* data, int rows, int cols) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      data, rows, cols);
  Eigen::MatrixXd gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// ‖Γ‖_E: spectral norm of Γ flattened to an N × N² matrix (row = upper
/// index). Bounds the bilinear mapping norm sup ‖Γ(u, v)‖ over unit u, v.
template <int N>
double euclidean_norm(const Christoffel<N>& gamma) {
  std::array<double, N * N * N> flat{};
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) flat[(k * N + i) * N + j] = gamma[k](i, j);
  return flattened_spectral_norm(flat.data(), N, N * N);
}

/// ‖R‖_E: spectral norm of R flattened to an N × N³ matrix (row = upper
/// index). Bounds the trilinear mapping norm sup ‖R(u, v)w‖ over unit u, v, w.
template <int N>
double euclidean_norm(const Riemann<N>& riemann) {
  return flattened_spectral_norm(riemann.data.data(), N, N * N * N);
}

struct Signature {
  int positive = 0;
  int negative = 0;
  friend bool operator==(const Signature&, const Signature&) = default;
};

/// Eigenvalue signature of a symmetric matrix. Eigenvalues with magnitude
/// below `floor_rel` × (largest magnitude) count as degenerate and raise
/// SingularMetric.
template <int N>
Signature signature_of(const Mat<N>& g, double floor_rel = 1e-8) {
  Eigen::SelfAdjointEigenSolver<Mat<N>> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Signature s;
  for (int i = 0; i < N; ++i) {
    if (!(std::abs(ev[i]) > floor_rel * scale)) throw Error(ErrorKind::SingularMetric, "degenerate eigenvalue");
    if (ev[i] > 0) ++s.positive; else ++s.negative;
  }
  return s;
}

template <int N>
Vec<N> to_vec(const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != N)
    throw Error(ErrorKind::InvalidArgument, "expected " + std::to_string(N) + " coordinates, got " +
                                                std::to_string(v.size()));
  Vec<N> out;
  for (int i = 0; i < N; ++i) out[i] = v[i];
  return out;
}

template <int N>
std::vector<double> to_std(const Vec<N>& v) {
  return std::vector<double>(v.data(), v.data() + N);
}

// Index of the symmetric pair (i, j) in upper-triangular row-major packing.
constexpr int sym_index(int n, int i, int j) {
  if (i > j) { int t = i; i = j; j = t; }
  return i * n - i * (i - 1) / 2 + (j - i);
}

constexpr int sym_count(int n) { return n * (n + 1) / 2; }

}  // namespace lipexp
