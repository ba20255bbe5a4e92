#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace monoeit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Eigen::Vector2d;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Violated precondition or malformed input (CLI exit code 1).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mesh does not resolve the requested electrode layout or test-set size.
class ResolutionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Singular systems, residual blowups, non-finite results (CLI exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace monoeit
