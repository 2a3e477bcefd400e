#pragma once

#include <Eigen/Dense>
#include <functional>

namespace catmap {

// Gauss-Hermite rule in the probabilists' convention: weights integrate
// against the standard normal density (they sum to 1, second moment 1).
struct QuadratureGrid {
  int dimension = 1;
  int nodes_per_axis = 48;
  Eigen::VectorXd nodes;    // per-axis nodes, ascending
  Eigen::VectorXd weights;  // per-axis weights
};

// nodes/weights by Golub-Welsch on the symmetric Jacobi tridiagonal
QuadratureGrid gauss_hermite(int nodes_per_axis, int dimension = 1);

// tensor-product expectation; f receives dimension arguments.
// Summation is pairwise over the flattened node index (deterministic order).
double expect(const QuadratureGrid& grid, const std::function<double(double)>& f);
double expect(const QuadratureGrid& grid,
              const std::function<double(double, double)>& f);
double expect(const QuadratureGrid& grid,
              const std::function<double(double, double, double)>& f);

// pairwise (cascade) sum of buf[0..n), fixed association order
double pairwise_sum(const double* buf, long n);

}  // namespace catmap
