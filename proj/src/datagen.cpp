#include "catmap/datagen.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "catmap/errors.hpp"

namespace catmap {

VectorXd gen_coefficients(const CoefficientSpec& spec, std::uint64_t seed) {
  if (spec.p <= 0) throw ArgumentError("gen_coefficients: p must be positive");
  if (spec.kappa1 <= 0.0)
    throw ArgumentError("gen_coefficients: kappa1 must be positive");
  VectorXd beta(spec.p);
  switch (spec.entry_law) {
    case EntryLaw::constant:
      beta.setConstant(spec.kappa1 / std::sqrt(static_cast<double>(spec.p)));
      break;
    case EntryLaw::scaled_t3: {
      Rng rng(seed);
      const double scale = spec.kappa1 / std::sqrt(3.0 * spec.p);
      for (int j = 0; j < spec.p; ++j) beta[j] = scale * rng.student_t(3);
      break;
    }
    case EntryLaw::custom:
      if (!spec.custom || spec.custom->size() != spec.p)
        throw ArgumentError("gen_coefficients: custom vector missing or wrong length");
      beta = *spec.custom;
      break;
  }
  if (spec.rescale_to_kappa) {
    double norm = beta.norm();
    if (norm == 0.0)
      throw ArgumentError("gen_coefficients: cannot rescale a zero vector");
    beta *= spec.kappa1 / norm;
  }
  return beta;
}

namespace {

MatrixXd gen_design_matrix(const DesignSpec& design, Rng& rng) {
  if (design.n <= 0 || design.p <= 0)
    throw ArgumentError("design: n and p must be positive");
  MatrixXd X(design.n, design.p);
  switch (design.law) {
    case DesignLaw::standard_gaussian:
      for (int i = 0; i < design.n; ++i)
        for (int j = 0; j < design.p; ++j) X(i, j) = rng.normal();
      break;
    case DesignLaw::gaussian_with_covariance: {
      if (!design.covariance || design.covariance->rows() != design.p ||
          design.covariance->cols() != design.p)
        throw ArgumentError("design: covariance must be p x p");
      Eigen::LLT<MatrixXd> llt(*design.covariance);
      if (llt.info() != Eigen::Success)
        throw ArgumentError("design: covariance must be positive definite");
      MatrixXd L = llt.matrixL();
      for (int i = 0; i < design.n; ++i)
        for (int j = 0; j < design.p; ++j) X(i, j) = rng.normal();
      X = X * L.transpose();
      break;
    }
    case DesignLaw::scaled_t: {
      if (design.df < 3)
        throw ArgumentError("design: scaled_t requires df >= 3");
      // standardize t_df to unit variance: Var(t_df) = df/(df-2)
      const double s = std::sqrt((design.df - 2.0) / design.df);
      for (int i = 0; i < design.n; ++i)
        for (int j = 0; j < design.p; ++j)
          X(i, j) = s * rng.student_t(design.df);
      break;
    }
  }
  return X;
}

VectorXd logistic_responses(const MatrixXd& X, const VectorXd& beta, Rng& rng) {
  VectorXd t = X * beta;
  VectorXd y(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i)
    y[i] = rng.bernoulli(rho1(t[i])) ? 1.0 : 0.0;
  return y;
}

}  // namespace

Dataset gen_logistic_data(const DesignSpec& design, const VectorXd& beta,
                          std::uint64_t seed) {
  if (design.p != beta.size())
    throw ArgumentError("gen_logistic_data: design.p must equal length(beta)");
  Rng rng(seed);
  Dataset data;
  data.covariates = gen_design_matrix(design, rng);
  data.responses = logistic_responses(data.covariates, beta, rng);
  data.role = Role::observed;
  return data;
}

VectorXd gen_beta_s(const VectorXd& beta0, double kappa2, double xi,
                    std::uint64_t seed) {
  if (xi < 0.0 || xi > 1.0) throw ArgumentError("gen_beta_s: xi must be in [0,1]");
  const double norm0 = beta0.norm();
  if (norm0 == 0.0 && xi > 0.0)
    throw ArgumentError("gen_beta_s: zero beta0 with xi > 0");
  const Eigen::Index p = beta0.size();
  Rng rng(seed);
  // eps entries i.i.d. scaled t3 with variance 1/p, independent of beta0
  VectorXd eps(p);
  const double scale = 1.0 / std::sqrt(3.0 * static_cast<double>(p));
  for (Eigen::Index j = 0; j < p; ++j) eps[j] = scale * rng.student_t(3);
  const double kappa1 = norm0;
  VectorXd beta_s = kappa2 * std::sqrt(1.0 - xi * xi) * eps;
  if (xi > 0.0) beta_s += xi * (kappa2 / kappa1) * beta0;
  return beta_s;
}

Dataset gen_synthetic(const AuxiliarySpec& aux, const DesignSpec& design,
                      const std::optional<VectorXd>& beta_s, std::uint64_t seed) {
  if (aux.M <= 0) throw ArgumentError("gen_synthetic: M must be positive");
  DesignSpec d = design;
  d.n = aux.M;
  Rng rng(seed);
  Dataset data;
  data.covariates = gen_design_matrix(d, rng);
  if (aux.kind == AuxiliaryKind::noninformative) {
    data.responses.resize(aux.M);
    for (int i = 0; i < aux.M; ++i)
      data.responses[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    data.role = Role::synthetic;
  } else {
    if (!beta_s)
      throw ArgumentError("gen_synthetic: informative kind requires beta_s");
    if (beta_s->size() != d.p)
      throw ArgumentError("gen_synthetic: beta_s length must equal design.p");
    data.responses = logistic_responses(data.covariates, *beta_s, rng);
    data.role = Role::auxiliary;
  }
  return data;
}

Dataset resample_covariates(const Dataset& observed, int M, std::uint64_t seed) {
  if (M <= 0) throw ArgumentError("resample_covariates: M must be positive");
  if (observed.n() == 0) throw ArgumentError("resample_covariates: observed data empty");
  Rng rng(seed);
  const Eigen::Index n = observed.n(), p = observed.p();
  Dataset data;
  data.covariates.resize(M, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (int i = 0; i < M; ++i)
      data.covariates(i, j) =
          observed.covariates(static_cast<Eigen::Index>(rng.below(n)), j);
  data.responses.resize(M);
  for (int i = 0; i < M; ++i) data.responses[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  data.role = Role::synthetic;
  return data;
}

MatrixXd toeplitz_ar1(int p, double r) {
  MatrixXd S(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) S(i, j) = std::pow(r, std::abs(i - j));
  return S;
}

}  // namespace catmap
