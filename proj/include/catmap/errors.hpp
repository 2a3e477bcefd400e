#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace catmap {

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Newton ran out of iterations; carries the last iterate for diagnostics.
struct ConvergenceError : NumericError {
  ConvergenceError(const std::string& msg, Eigen::VectorXd iterate,
                   double grad_norm)
      : NumericError(msg), last_iterate(std::move(iterate)),
        gradient_norm(grad_norm) {}
  Eigen::VectorXd last_iterate;
  double gradient_norm;
};

// Objective unbounded below along a ray: combined data separable, no finite
// MAP optimum exists.
struct ExistenceError : NumericError {
  using NumericError::NumericError;
};

struct NonUniquenessError : NumericError {
  using NumericError::NumericError;
};

// Requested eta is outside the g_delta dictionary range.
struct OutOfDictionaryError : NumericError {
  OutOfDictionaryError(const std::string& msg, double eta_hat_, double lo_,
                       double hi_)
      : NumericError(msg), eta_hat(eta_hat_), lo(lo_), hi(hi_) {}
  double eta_hat;
  double lo;
  double hi;
};

}  // namespace catmap
