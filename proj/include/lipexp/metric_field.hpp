#pragma once

#include <algorithm>
#include <limits>
#include <memory>
#include <sstream>
#include <string>

#include "lipexp/linalg.hpp"

namespace lipexp {

enum class Regularity { SmoothAnalytic, C11Analytic, GridSampled };

inline std::string to_string(Regularity r) {
  switch (r) {
    case Regularity::SmoothAnalytic: return "smooth-analytic";
    case Regularity::C11Analytic: return "C11-analytic";
    case Regularity::GridSampled: return "grid-sampled";
  }
  return "unknown";
}

template <int N>
struct Box {
  Vec<N> lo;
  Vec<N> hi;

  static Box centered(const Vec<N>& center, double half_width) {
    return {center.array() - half_width, center.array() + half_width};
  }
  bool contains(const Vec<N>& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  Vec<N> center() const { return 0.5 * (lo + hi); }
};

/// Chart domain: an axis-aligned box or a Euclidean ball.
template <int N>
class ChartDomain {
 public:
  static ChartDomain box(const Vec<N>& lo, const Vec<N>& hi) {
    ChartDomain d;
    d.is_ball_ = false;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }
  static ChartDomain ball(const Vec<N>& center, double radius) {
    ChartDomain d;
    d.is_ball_ = true;
    d.center_ = center;
    d.radius_ = radius;
    return d;
  }

  bool is_ball() const { return is_ball_; }
  const Vec<N>& lo() const { return lo_; }
  const Vec<N>& hi() const { return hi_; }
  const Vec<N>& center() const { return center_; }
  double radius() const { return radius_; }

  bool contains(const Vec<N>& x) const {
    if (!x.allFinite()) return false;
    if (is_ball_) return (x - center_).norm() <= radius_;
    return (x.array() >= lo_.array()).all() && (x.array() <= hi_.array()).all();
  }

  /// Distance from x to the domain boundary (negative outside).
  double clearance(const Vec<N>& x) const {
    if (is_ball_) return radius_ - (x - center_).norm();
    double c = std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) c = std::min({c, x[i] - lo_[i], hi_[i] - x[i]});
    return c;
  }

  bool contains_ball(const Vec<N>& c, double r) const { return clearance(c) >= r; }

  bool contains_box(const Box<N>& b) const {
    if (is_ball_) {
      // farthest corner
      Vec<N> far;
      for (int i = 0; i < N; ++i)
        far[i] = std::abs(b.lo[i] - center_[i]) > std::abs(b.hi[i] - center_[i]) ? b.lo[i] : b.hi[i];
      return (far - center_).norm() <= radius_;
    }
    return (b.lo.array() >= lo_.array()).all() && (b.hi.array() <= hi_.array()).all();
  }

  /// Domain shrunk by `margin` on every side.
  ChartDomain shrunk(double margin) const {
    if (is_ball_) return ball(center_, radius_ - margin);
    return box(lo_.array() + margin, hi_.array() - margin);
  }

  std::string describe() const {
    std::ostringstream os;
    if (is_ball_) {
      os << "ball(center=[" << center_.transpose() << "], r=" << radius_ << ")";
    } else {
      os << "box([" << lo_.transpose() << "], [" << hi_.transpose() << "])";
    }
    return os.str();
  }

 private:
  bool is_ball_ = false;
  Vec<N> lo_ = Vec<N>::Zero(), hi_ = Vec<N>::Zero(), center_ = Vec<N>::Zero();
  double radius_ = 0.0;
};

/// Metric components and derivatives at one chart point.
template <int N>
struct MetricJet {
  Mat<N> g = Mat<N>::Identity();
  std::array<Mat<N>, N> dg{};                  // dg[k] = ∂_k g
  std::array<std::array<Mat<N>, N>, N> d2g{};  // d2g[k][l] = ∂_k ∂_l g
  int order = 0;
};

/// A metric on one coordinate chart. Implementations are immutable and safe to
/// evaluate concurrently.
template <int N>
class MetricField {
 public:
  MetricField(std::string name, Signature signature, ChartDomain<N> domain)
      : name_(std::move(name)), signature_(signature), domain_(std::move(domain)) {
    if (signature.positive + signature.negative != N)
      throw Error(ErrorKind::InvalidArgument, "signature does not sum to the dimension");
  }
  virtual ~MetricField() = default;

  static constexpr int dimension = N;

  const std::string& name() const { return name_; }
  Signature signature() const { return signature_; }
  const ChartDomain<N>& domain() const { return domain_; }

  virtual Regularity regularity() const = 0;
  /// Highest derivative order available (1 for raw C^{1,1} data, 2 otherwise).
  virtual int max_order() const = 0;

  bool has_curvature() const { return max_order() >= 2; }

  /// Components with derivatives up to `order`.
  MetricJet<N> jet(const Vec<N>& x, int order) const {
    if (order > max_order())
      throw Error(ErrorKind::InsufficientRegularity,
                  name_ + " has no derivatives of order " + std::to_string(order) +
                      " (mollify C^{1,1} data first)");
    if (!domain_.contains(x)) {
      std::ostringstream os;
      os << name_ << ": point [" << x.transpose() << "] outside " << domain_.describe();
      throw Error(ErrorKind::OutOfDomain, os.str());
    }
    MetricJet<N> j = evaluate(x, order);
    j.order = order;
    return j;
  }

  Mat<N> g(const Vec<N>& x) const { return jet(x, 0).g; }

 protected:
  virtual MetricJet<N> evaluate(const Vec<N>& x, int order) const = 0;

 private:
  std::string name_;
  Signature signature_;
  ChartDomain<N> domain_;
};

template <int N>
using MetricPtr = std::shared_ptr<const MetricField<N>>;

}  // namespace lipexp
