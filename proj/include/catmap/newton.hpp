#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "catmap/glm.hpp"
#include "catmap/quadrature.hpp"

namespace catmap {

struct NewtonOptions {
  double grad_tol = 1e-10;      // infinity norm of the gradient
  int max_iter = 200;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double ridge_floor = 1e-12;   // added to the Hessian diagonal on LLT failure
  double divergence_norm = 1e6; // ||beta|| beyond this means no finite optimum
  std::optional<VectorXd> initial;  // testing hook; default is beta = 0
  // reuse the factorization while full steps keep shrinking the gradient
  // fast; the convergence test always uses the exact gradient
  bool reuse_factorization = true;
};

struct MapFit {
  VectorXd beta_hat;
  double tau = 0.0;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  std::vector<std::string> warnings;
};

enum class Separability { separable, nonseparable };

// Exact margin-form separation test: separable iff there is beta with
// (2 y_i - 1) x_i' beta >= 1 for all i. Solved through the Gale alternative
// system {lambda >= 0, A' lambda = 0, 1' lambda = 1} with a dense phase-one
// simplex (basis size p+1). For n*p > 1e6 falls back to a perceptron-with-
// margin heuristic.
Separability check_separable(const Dataset& data);

// Damped Newton on a smooth convex objective supplied through callbacks.
struct NewtonCallbacks {
  std::function<double(const VectorXd&)> value;
  // returns value, fills gradient
  std::function<double(const VectorXd&, VectorXd&)> value_grad;
  // returns value, fills gradient and Hessian
  std::function<double(const VectorXd&, VectorXd&, MatrixXd&)> value_grad_hess;
};

MapFit newton_minimize(Eigen::Index p, const NewtonCallbacks& cb,
                       const NewtonOptions& opts, double tau);

// Finite-M MAP estimate: minimizes the weighted objective over beta.
MapFit fit_map(const Dataset& observed, const Dataset& synthetic, double tau,
               const GlmFamily& family = logistic_family(),
               const NewtonOptions& opts = {});

// Population MAP for Gaussian non-informative synthetic data: the synthetic
// average is replaced by its expectation tau * E[rho(||beta|| Z)], evaluated
// with the supplied 1-D Gauss-Hermite grid.
MapFit fit_map_population(const Dataset& observed, double tau,
                          const NewtonOptions& opts, const QuadratureGrid& quad);

using TauRule = std::function<double(Eigen::Index)>;  // half sample size -> tau
using AuxBuilder =
    std::function<Dataset(const Dataset& half, std::uint64_t seed)>;

// Random equal split (first half gets the extra row when n is odd); each
// half is fitted with its own freshly built synthetic data and
// tau = tau_rule(half size).
std::pair<MapFit, MapFit> split_fit(const Dataset& observed,
                                    const TauRule& tau_rule,
                                    const AuxBuilder& aux_builder,
                                    std::uint64_t seed,
                                    const GlmFamily& family = logistic_family(),
                                    const NewtonOptions& opts = {});

// the row partition used by split_fit for a given seed
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>
split_indices(Eigen::Index n, std::uint64_t seed);

Dataset subset_rows(const Dataset& data, const std::vector<Eigen::Index>& rows);

}  // namespace catmap
