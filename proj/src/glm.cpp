#include "catmap/glm.hpp"

#include <cblas.h>
#include <cmath>

#include "catmap/errors.hpp"

namespace catmap {

RhoValue rho_family(double t) {
  double p = rho1(t);
  return {rho(t), p, p * (1.0 - p)};
}

const GlmFamily& logistic_family() {
  static const GlmFamily fam{
      "logistic",
      [](double t) { return rho(t); },
      [](double t) { return rho1(t); },
      [](double t) { return rho2(t); },
      [](double y) {
        if (y != 0.0 && y != 1.0)
          throw ArgumentError("logistic responses must be exactly 0 or 1");
      }};
  return fam;
}

const GlmFamily& gaussian_family() {
  static const GlmFamily fam{
      "gaussian",
      [](double t) { return 0.5 * t * t; },
      [](double t) { return t; },
      [](double) { return 1.0; },
      [](double y) {
        if (!std::isfinite(y))
          throw ArgumentError("gaussian responses must be finite");
      }};
  return fam;
}

const GlmFamily& poisson_family() {
  static const GlmFamily fam{
      "poisson",
      [](double t) { return std::exp(t); },
      [](double t) { return std::exp(t); },
      [](double t) { return std::exp(t); },
      [](double y) {
        if (y < 0.0 || y != std::floor(y))
          throw ArgumentError("poisson responses must be nonnegative integers");
      }};
  return fam;
}

void validate_dataset(const Dataset& data, const GlmFamily& family) {
  if (data.covariates.rows() != data.responses.size())
    throw ArgumentError("dataset: row count of covariates must equal length of responses");
  for (Eigen::Index i = 0; i < data.responses.size(); ++i)
    family.check_response(data.responses[i]);
}

namespace {

// value/gradient contribution of one data block with weight w:
//   w * sum_i [b(t_i) - y_i t_i],  t = X beta
double block_value_grad(const GlmFamily& family, const Dataset& data,
                        const VectorXd& beta, double w, VectorXd* grad) {
  const VectorXd t = data.covariates * beta;
  double value = 0.0;
  VectorXd r(t.size());
  const bool logistic = family.name == "logistic";
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (logistic) {
      value += rho(t[i]) - data.responses[i] * t[i];
      r[i] = rho1(t[i]) - data.responses[i];
    } else {
      value += family.b(t[i]) - data.responses[i] * t[i];
      r[i] = family.b1(t[i]) - data.responses[i];
    }
  }
  if (grad) grad->noalias() += w * (data.covariates.transpose() * r);
  return w * value;
}

// H += w * X' diag(b2(X beta)) X, via a row-scaled copy and dsyrk
void block_hessian(const GlmFamily& family, const Dataset& data,
                   const VectorXd& beta, double w, MatrixXd* scratch,
                   MatrixXd* hess) {
  const Eigen::Index n = data.n(), p = data.p();
  const VectorXd t = data.covariates * beta;
  scratch->resize(n, p);
  const bool logistic = family.name == "logistic";
  VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d2 = logistic ? rho2(t[i]) : family.b2(t[i]);
    s[i] = std::sqrt(w * d2);
  }
  scratch->noalias() = s.asDiagonal() * data.covariates;
  // hess (col-major, p x p) += A'A for A = scratch (n x p)
  cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, static_cast<int>(p),
              static_cast<int>(n), 1.0, scratch->data(), static_cast<int>(n),
              1.0, hess->data(), static_cast<int>(p));
}

void check_inputs(const Dataset& observed, const Dataset& synthetic,
                  const VectorXd& beta, double tau) {
  if (observed.p() != beta.size() ||
      (synthetic.n() > 0 && synthetic.p() != beta.size()))
    throw ArgumentError("weighted_objective: dimension mismatch between beta and data");
  if (observed.covariates.rows() != observed.responses.size() ||
      synthetic.covariates.rows() != synthetic.responses.size())
    throw ArgumentError("weighted_objective: covariate/response row mismatch");
  if (tau < 0.0) throw ArgumentError("weighted_objective: tau must be >= 0");
  if (tau > 0.0 && synthetic.n() == 0)
    throw ArgumentError("weighted_objective: tau > 0 requires synthetic data");
}

}  // namespace

ObjectiveEval weighted_objective(const GlmFamily& family, const Dataset& observed,
                                 const Dataset& synthetic, const VectorXd& beta,
                                 double tau) {
  check_inputs(observed, synthetic, beta, tau);
  const Eigen::Index p = beta.size();
  ObjectiveEval out;
  out.gradient = VectorXd::Zero(p);
  out.hessian = MatrixXd::Zero(p, p);
  out.value = block_value_grad(family, observed, beta, 1.0, &out.gradient);
  MatrixXd scratch;
  block_hessian(family, observed, beta, 1.0, &scratch, &out.hessian);
  if (tau > 0.0 && synthetic.n() > 0) {
    const double w = tau / static_cast<double>(synthetic.n());
    out.value += block_value_grad(family, synthetic, beta, w, &out.gradient);
    block_hessian(family, synthetic, beta, w, &scratch, &out.hessian);
  }
  out.hessian.triangularView<Eigen::StrictlyUpper>() =
      out.hessian.transpose().triangularView<Eigen::StrictlyUpper>();
  return out;
}

double weighted_objective_value(const GlmFamily& family, const Dataset& observed,
                                const Dataset& synthetic, const VectorXd& beta,
                                double tau) {
  check_inputs(observed, synthetic, beta, tau);
  double value = block_value_grad(family, observed, beta, 1.0, nullptr);
  if (tau > 0.0 && synthetic.n() > 0)
    value += block_value_grad(family, synthetic, beta,
                              tau / static_cast<double>(synthetic.n()), nullptr);
  return value;
}

}  // namespace catmap
