#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "catmap/errors.hpp"
#include "catmap/newton.hpp"

namespace catmap {

namespace {

// Phase-one simplex feasibility of {lambda >= 0, B lambda = d} with d >= 0.
// Returns true when the system is feasible (artificial objective reaches 0).
bool standard_form_feasible(const MatrixXd& B, const VectorXd& d) {
  const Eigen::Index m = B.rows(), ncols = B.cols();
  const Eigen::Index total = ncols + m;  // structural + artificial columns
  // tableau rows 0..m-1: [B | I | d]; row m: reduced costs with -objective
  // in the corner (artificial basis priced out)
  MatrixXd T = MatrixXd::Zero(m + 1, total + 1);
  T.block(0, 0, m, ncols) = B;
  T.block(0, ncols, m, m) = MatrixXd::Identity(m, m);
  T.block(0, total, m, 1) = d;
  for (Eigen::Index j = 0; j < ncols; ++j) T(m, j) = -B.col(j).sum();
  T(m, total) = -d.sum();
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = ncols + i;

  const double eps = 1e-9;
  const long max_pivots = 50L * (m + ncols);
  for (long pivot = 0; pivot < max_pivots; ++pivot) {
    if (-T(m, total) <= 1e-8) return true;  // artificial mass exhausted
    // Bland's rule: smallest index with negative reduced cost (no cycling)
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < total; ++j)
      if (T(m, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) break;  // optimal with positive artificial mass
    Eigen::Index leave = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) > eps) {
        double ratio = T(i, total) / T(i, enter);
        if (leave < 0 || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) break;  // entering column nonpositive; cannot pivot
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0)
        T.row(i) -= T(i, enter) * T.row(leave);
    basis[leave] = enter;
  }
  return -T(m, total) <= 1e-8;
}

// perceptron with margin; returns true iff a margin-1 separator was found
bool perceptron_separates(const MatrixXd& A, int max_epochs) {
  const Eigen::Index n = A.rows(), p = A.cols();
  VectorXd beta = VectorXd::Zero(p);
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    bool clean = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double margin = A.row(i).dot(beta);
      if (margin < 1.0) {
        double norm2 = A.row(i).squaredNorm();
        if (norm2 > 0.0) beta += ((1.0 - margin) / norm2 + 1e-3) * A.row(i).transpose();
        clean = false;
      }
    }
    if (clean) return true;
  }
  return false;
}

}  // namespace

Separability check_separable(const Dataset& data) {
  if (data.n() == 0) throw ArgumentError("check_separable: empty data");
  validate_dataset(data, logistic_family());
  const Eigen::Index n = data.n(), p = data.p();
  MatrixXd A(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    A.row(i) = (2.0 * data.responses[i] - 1.0) * data.covariates.row(i);

  if (static_cast<long>(n) * p > 1000000L) {
    return perceptron_separates(A, 200) ? Separability::separable
                                        : Separability::nonseparable;
  }

  // Gale alternative: {A beta >= 1} is infeasible exactly when
  // {lambda >= 0, A' lambda = 0, 1' lambda = 1} is feasible.
  MatrixXd B(p + 1, n);
  B.topRows(p) = A.transpose();
  B.bottomRows(1).setOnes();
  VectorXd d = VectorXd::Zero(p + 1);
  d[p] = 1.0;
  bool alternative_feasible = standard_form_feasible(B, d);
  return alternative_feasible ? Separability::nonseparable
                              : Separability::separable;
}

}  // namespace catmap
