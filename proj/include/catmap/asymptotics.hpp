#pragma once

#include <Eigen/Dense>
#include <limits>

#include "catmap/quadrature.hpp"

namespace catmap {

// Scaling regime of Condition 5: tau/n = tau0, M/n = m, n/p = delta, with the
// signal parameters (kappa1, kappa2, xi). gamma0 = tau0*gamma/m is always
// derived, never stored.
struct ScalingParams {
  double delta = 2.0;
  double tau0 = 0.25;
  double m = 10.0;  // may be +infinity for the population systems
  double kappa1 = 1.0;
  double kappa2 = 0.0;
  double xi = 0.0;
};

enum class SystemKind { three_eq, four_eq, m_infinity };

struct ScalarSolution {
  double alpha1 = 1.0;
  double alpha2 = 0.0;
  double sigma = 1.0;
  double gamma = 1.0;
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
  SystemKind system = SystemKind::three_eq;
};

struct FixedPointOptions {
  int max_iter = 500;
  double update_tol = 1e-9;    // max |coordinate update|, 3 consecutive times
  double residual_tol = 1e-8;  // infinity norm at the returned point
  double omega = 0.5;          // damping, halved on oscillation (floor 0.05)
  int quad_nodes = 48;
  bool check_uniqueness = false;  // re-solve from spread starts and compare
};

// residuals (LHS - RHS) of the three-variable system at (alpha, sigma, gamma)
Eigen::Vector3d residuals_3eq(const Eigen::Vector3d& state,
                              const ScalingParams& params,
                              const QuadratureGrid& grid);

// residuals of the four-variable system at (alpha1, alpha2, sigma, gamma)
Eigen::Vector4d residuals_4eq(const Eigen::Vector4d& state,
                              const ScalingParams& params,
                              const QuadratureGrid& grid);

// residuals of the m -> infinity three-variable system
Eigen::Vector3d residuals_minfty(const Eigen::Vector3d& state,
                                 const ScalingParams& params,
                                 const QuadratureGrid& grid);

ScalarSolution solve_3eq(const ScalingParams& params,
                         const FixedPointOptions& opts = {});
ScalarSolution solve_4eq(const ScalingParams& params,
                         const FixedPointOptions& opts = {});
// m = +infinity systems (conjecture-backed); kappa2 = 0 gives the
// non-informative limit, kappa2 > 0 the informative one
ScalarSolution solve_minfty(const ScalingParams& params,
                            const FixedPointOptions& opts = {});

struct LimitMetrics {
  double mse;
  double cosine;
  double gen_error;
  double pred_deviance;
};

LimitMetrics limit_metrics(const ScalarSolution& sol, const ScalingParams& params);

// standard normal CDF and quantile
double norm_cdf(double x);
double norm_quantile(double p);

}  // namespace catmap
