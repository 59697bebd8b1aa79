#include "mhe/kl.hpp"

#include <sstream>

namespace mhe {

KLFunction::KLFunction(Family f, double kappa, double q, double eta_b, double c1)
    : family_(f), kappa_(kappa), q_(q), eta_b_(eta_b), c1_(c1) {
  MHE_REQUIRE(kappa >= 0.0, "KLFunction: kappa must be >= 0");
  MHE_REQUIRE(q > 0.0, "KLFunction: exponent q must be > 0");
  MHE_REQUIRE(eta_b > 0.0 && eta_b < 1.0, "KLFunction: eta_b must lie in (0,1)");
  MHE_REQUIRE(c1 > 0.0, "KLFunction: c1 must be > 0");
}

KLFunction KLFunction::power(double kappa, double q, double eta_b) {
  return KLFunction(Family::kPower, kappa, q, eta_b, 1.0);
}

KLFunction KLFunction::log_supply(double kappa, double q, double eta_b,
                                  double c1) {
  return KLFunction(Family::kLogSupply, kappa, q, eta_b, c1);
}

KLFunction KLFunction::log_state(double kappa, double eta_b, double c1) {
  return KLFunction(Family::kLogState, kappa, 2.0, eta_b, c1);
}

KLFunction KLFunction::scaled_inner(double factor) const {
  KLFunction out = *this;
  out.kappa_ *= factor;
  return out;
}

std::string KLFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case Family::kPower:
      os << kappa_ << "*s^" << q_ << "*" << eta_b_ << "^k";
      break;
    case Family::kLogSupply:
      os << "a1inv(" << eta_b_ << "^k*" << kappa_ << "*s^" << q_ << "), c1="
         << c1_;
      break;
    case Family::kLogState:
      os << "a1inv(" << eta_b_ << "^k*" << kappa_ << "*ln(c1 s^2+1)), c1="
         << c1_;
      break;
  }
  return os.str();
}

}  // namespace mhe
