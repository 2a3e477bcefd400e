#include "catmap/quadrature.hpp"

#include <cmath>
#include <vector>

#include "catmap/errors.hpp"

namespace catmap {

double pairwise_sum(const double* buf, long n) {
  if (n <= 8) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += buf[i];
    return s;
  }
  long half = n / 2;
  return pairwise_sum(buf, half) + pairwise_sum(buf + half, n - half);
}

QuadratureGrid gauss_hermite(int n, int dimension) {
  if (n < 1) throw ArgumentError("gauss_hermite: need at least one node");
  if (dimension < 1 || dimension > 3)
    throw ArgumentError("gauss_hermite: dimension must be 1, 2, or 3");
  // Jacobi matrix of probabilists' Hermite polynomials: zero diagonal,
  // off-diagonal sqrt(k)
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw NumericError("gauss_hermite: eigen-decomposition failed");
  QuadratureGrid grid;
  grid.dimension = dimension;
  grid.nodes_per_axis = n;
  grid.nodes = es.eigenvalues();
  grid.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = es.eigenvectors()(0, i);
    grid.weights[i] = v * v;  // total mass 1 in the probabilists' convention
  }
  // enforce exact symmetry of the rule (eigensolver leaves ~1e-15 asymmetry)
  for (int i = 0; i < n / 2; ++i) {
    int j = n - 1 - i;
    double node = 0.5 * (grid.nodes[j] - grid.nodes[i]);
    grid.nodes[i] = -node;
    grid.nodes[j] = node;
    double w = 0.5 * (grid.weights[i] + grid.weights[j]);
    grid.weights[i] = w;
    grid.weights[j] = w;
  }
  if (n % 2 == 1) grid.nodes[n / 2] = 0.0;
  return grid;
}

namespace {

void check_finite(double v, long flat_index) {
  if (!std::isfinite(v))
    throw NumericError("expect: non-finite integrand value at node " +
                       std::to_string(flat_index));
}

}  // namespace

double expect(const QuadratureGrid& grid, const std::function<double(double)>& f) {
  if (grid.dimension != 1)
    throw ArgumentError("expect: 1-argument integrand needs a 1-D grid");
  const int n = grid.nodes_per_axis;
  std::vector<double> terms(n);
  for (int i = 0; i < n; ++i) {
    double v = f(grid.nodes[i]);
    check_finite(v, i);
    terms[i] = grid.weights[i] * v;
  }
  return pairwise_sum(terms.data(), n);
}

double expect(const QuadratureGrid& grid,
              const std::function<double(double, double)>& f) {
  if (grid.dimension != 2)
    throw ArgumentError("expect: 2-argument integrand needs a 2-D grid");
  const int n = grid.nodes_per_axis;
  std::vector<double> terms(static_cast<long>(n) * n);
  long k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j, ++k) {
      double v = f(grid.nodes[i], grid.nodes[j]);
      check_finite(v, k);
      terms[k] = grid.weights[i] * grid.weights[j] * v;
    }
  return pairwise_sum(terms.data(), k);
}

double expect(const QuadratureGrid& grid,
              const std::function<double(double, double, double)>& f) {
  if (grid.dimension != 3)
    throw ArgumentError("expect: 3-argument integrand needs a 3-D grid");
  const int n = grid.nodes_per_axis;
  std::vector<double> terms(static_cast<long>(n) * n * n);
  long k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double wij = grid.weights[i] * grid.weights[j];
      for (int l = 0; l < n; ++l, ++k) {
        double v = f(grid.nodes[i], grid.nodes[j], grid.nodes[l]);
        check_finite(v, k);
        terms[k] = wij * grid.weights[l] * v;
      }
    }
  return pairwise_sum(terms.data(), k);
}

}  // namespace catmap
