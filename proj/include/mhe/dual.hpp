#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace mhe {

/// Forward-mode dual number carrying one directional derivative.
///
/// `kink` records that a non-differentiable point was crossed (e.g. the
/// Euclidean norm evaluated at the origin). The derivative reported there is
/// the zero subgradient.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  bool kink = false;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT(runtime/explicit)
  constexpr Dual(double value, double deriv, bool k = false)
      : v(value), d(deriv), kink(k) {}

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator+(const Dual& a, const Dual& b) {
    return {a.v + b.v, a.d + b.d, a.kink || b.kink};
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    return {a.v - b.v, a.d - b.d, a.kink || b.kink};
  }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d, a.kink}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.kink || b.kink};
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v),
            a.kink || b.kink};
  }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
  friend bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }
};

/// While installed, `abs` treats |a| <= tolerance as its kink and uses the
/// next entry of `signs` (or 0 when exhausted) as its derivative there.
/// Evaluation order is deterministic, so the k-th kink met in one pass is the
/// k-th kink in every other pass at the same point.
struct KinkPolicy {
  double tolerance = 0.0;
  std::vector<double> signs;
  std::size_t met = 0;
};

inline KinkPolicy*& active_kink_policy() {
  static thread_local KinkPolicy* policy = nullptr;
  return policy;
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  if (s == 0.0) return {0.0, 0.0, true};
  return {s, a.d / (2.0 * s), a.kink};
}
inline Dual sin(const Dual& a) {
  return {std::sin(a.v), a.d * std::cos(a.v), a.kink};
}
inline Dual cos(const Dual& a) {
  return {std::cos(a.v), -a.d * std::sin(a.v), a.kink};
}
inline Dual atan(const Dual& a) {
  return {std::atan(a.v), a.d / (1.0 + a.v * a.v), a.kink};
}
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, a.d * e, a.kink};
}
inline Dual expm1(const Dual& a) {
  return {std::expm1(a.v), a.d * std::exp(a.v), a.kink};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v, a.kink}; }
inline Dual log1p(const Dual& a) {
  return {std::log1p(a.v), a.d / (1.0 + a.v), a.kink};
}
inline Dual abs(const Dual& a) {
  if (KinkPolicy* p = active_kink_policy(); p && std::abs(a.v) <= p->tolerance) {
    const std::size_t k = p->met++;
    const double s = k < p->signs.size() ? p->signs[k] : 0.0;
    return {std::abs(a.v), s * a.d, true};
  }
  if (a.v > 0.0) return a;
  if (a.v < 0.0) return -a;
  return {0.0, 0.0, true};
}
inline Dual pow(const Dual& a, double q) {
  if (a.v == 0.0) {
    // d/ds s^q at 0 is 0 for q > 1, infinite for q < 1; report the kink.
    return {std::pow(0.0, q), q == 1.0 ? a.d : 0.0, q < 1.0 || a.kink};
  }
  const double p = std::pow(a.v, q);
  return {p, a.d * q * p / a.v, a.kink};
}

}  // namespace mhe

namespace Eigen {

template <>
struct NumTraits<mhe::Dual> : GenericNumTraits<mhe::Dual> {
  using Real = mhe::Dual;
  using NonInteger = mhe::Dual;
  using Nested = mhe::Dual;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 2,
    MulCost = 3
  };
  static inline Real epsilon() { return mhe::Dual(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() { return mhe::Dual(1e-12); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

}  // namespace Eigen
