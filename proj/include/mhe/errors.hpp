#pragma once

#include <stdexcept>
#include <string>

namespace mhe {

/// A precondition stated by an operation's contract does not hold
/// (dimension mismatch, parameter outside its admissible range).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MHE_REQUIRE(cond, msg)                                      \
  do {                                                              \
    if (!(cond)) throw ::mhe::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace mhe
