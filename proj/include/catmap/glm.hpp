#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace catmap {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// log-partition of the Bernoulli family, rho(t) = log(1 + e^t),
// overflow-safe over the whole double range
struct RhoValue {
  double value;
  double d1;
  double d2;
};

inline double rho(double t) {
  return (t > 0.0 ? t : 0.0) + std::log1p(std::exp(-std::abs(t)));
}

inline double rho1(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  double e = std::exp(t);
  return e / (1.0 + e);
}

inline double rho2(double t) {
  double p = rho1(t);
  return p * (1.0 - p);
}

RhoValue rho_family(double t);

// Canonical GLM family: b is the log-partition, b1/b2 its derivatives.
struct GlmFamily {
  std::string name;
  std::function<double(double)> b;
  std::function<double(double)> b1;
  std::function<double(double)> b2;
  // throws ArgumentError when a response is outside the family domain
  std::function<void(double)> check_response;
};

const GlmFamily& logistic_family();
const GlmFamily& gaussian_family();
const GlmFamily& poisson_family();

enum class Role { observed, synthetic, auxiliary };

// Covariate matrix (rows = units) plus responses; immutable by convention
// after construction.
struct Dataset {
  MatrixXd covariates;
  VectorXd responses;
  Role role = Role::observed;

  Eigen::Index n() const { return covariates.rows(); }
  Eigen::Index p() const { return covariates.cols(); }
};

// throws on row-count mismatch or responses outside the family domain
void validate_dataset(const Dataset& data, const GlmFamily& family);

struct ObjectiveEval {
  double value;
  VectorXd gradient;
  MatrixXd hessian;
};

// Negated log-posterior of the synthetic-data-regularized fit:
//   sum_i [b(x_i'beta) - y_i x_i'beta]
//     + (tau/M) sum_j [b(x*_j'beta) - y*_j x*_j'beta]
// Minimization convention; gradient and Hessian are exact.
ObjectiveEval weighted_objective(const GlmFamily& family, const Dataset& observed,
                                 const Dataset& synthetic, const VectorXd& beta,
                                 double tau);

// value and gradient only (line searches, gradient checks)
double weighted_objective_value(const GlmFamily& family, const Dataset& observed,
                                const Dataset& synthetic, const VectorXd& beta,
                                double tau);

}  // namespace catmap
