#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "mhe/dual.hpp"
#include "mhe/errors.hpp"

namespace mhe {

/// Class-KL function (s, k) -> value, closed under the compositions used by
/// the two case studies.
///
///   power      : kappa * s^q * eta_b^k
///   log_supply : a1^{-1}(eta_b^k * kappa * s^q)            with a1(s) = ln(c1 s^2 + 1)
///   log_state  : a1^{-1}(eta_b^k * kappa * ln(c1 s^2 + 1))
///
/// where a1^{-1}(r) = sqrt(expm1(r) / c1). The log families grow like
/// exp(r/2), so they are evaluated through `log_value`.
class KLFunction {
 public:
  enum class Family { kPower, kLogSupply, kLogState };

  KLFunction() = default;

  static KLFunction power(double kappa, double q, double eta_b);
  static KLFunction log_supply(double kappa, double q, double eta_b, double c1);
  static KLFunction log_state(double kappa, double eta_b, double c1);

  Family family() const { return family_; }
  double kappa() const { return kappa_; }
  double q() const { return q_; }
  double eta_b() const { return eta_b_; }
  double c1() const { return c1_; }

  /// Same family with kappa multiplied by `factor` (power family only has a
  /// meaningful scaling; for log families it scales the inner argument).
  KLFunction scaled_inner(double factor) const;

  double operator()(double s, double k) const { return value(s, k); }

  template <typename T>
  T value(const T& s, double k) const;

  /// ln(value); -infinity at s = 0 with a zero derivative.
  template <typename T>
  T log_value(const T& s, double k) const;

  std::string describe() const;

 private:
  KLFunction(Family f, double kappa, double q, double eta_b, double c1);

  template <typename T>
  T inner(const T& s, double k) const;

  Family family_ = Family::kPower;
  double kappa_ = 1.0;
  double q_ = 1.0;
  double eta_b_ = 0.5;
  double c1_ = 1.0;
};

namespace detail {

/// ln(expm1(r)) for r > 0 without overflow.
template <typename T>
T log_expm1(const T& r) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  if (value_of(r) > 30.0) return r + log1p(-exp(-r));
  return log(expm1(r));
}

}  // namespace detail

template <typename T>
T KLFunction::inner(const T& s, double k) const {
  using std::log1p;
  using std::pow;
  const double decay = std::pow(eta_b_, k);
  if (family_ == Family::kLogState) {
    return decay * kappa_ * log1p(c1_ * s * s);
  }
  return decay * kappa_ * pow(s, q_);
}

template <typename T>
T KLFunction::value(const T& s, double k) const {
  using std::exp;
  using std::pow;
  if (value_of(s) <= 0.0) return T(0.0);
  if (family_ == Family::kPower) {
    return kappa_ * pow(s, q_) * std::pow(eta_b_, k);
  }
  return exp(log_value(s, k));
}

template <typename T>
T KLFunction::log_value(const T& s, double k) const {
  using std::log;
  if (value_of(s) <= 0.0 || kappa_ == 0.0) {
    return T(-std::numeric_limits<double>::infinity());
  }
  if (family_ == Family::kPower) {
    return std::log(kappa_) + q_ * log(s) + k * std::log(eta_b_);
  }
  const T r = inner(s, k);
  if (value_of(r) <= 0.0) return T(-std::numeric_limits<double>::infinity());
  return 0.5 * (detail::log_expm1(r) - std::log(c1_));
}

}  // namespace mhe
