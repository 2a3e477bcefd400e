#pragma once

#include <cstdint>
#include <optional>

#include "catmap/glm.hpp"
#include "catmap/rng.hpp"

namespace catmap {

enum class EntryLaw { scaled_t3, constant, custom };

// True-coefficient generator. scaled_t3 draws kappa1 * T_j / sqrt(3p) with
// T_j i.i.d. Student-t(3) so that E||beta0||^2 = kappa1^2; constant uses
// kappa1/sqrt(p) in every coordinate (||beta0|| = kappa1 exactly).
struct CoefficientSpec {
  int p = 0;
  double kappa1 = 1.0;
  EntryLaw entry_law = EntryLaw::scaled_t3;
  std::optional<VectorXd> custom;
  // rescale each draw to have norm exactly kappa1 (off by default: the
  // limit condition only fixes the norm in expectation)
  bool rescale_to_kappa = false;
};

enum class DesignLaw { standard_gaussian, gaussian_with_covariance, scaled_t };

struct DesignSpec {
  int n = 0;
  int p = 0;
  DesignLaw law = DesignLaw::standard_gaussian;
  std::optional<MatrixXd> covariance;  // p x p positive definite
  int df = 3;                          // for scaled_t, df >= 3
};

enum class AuxiliaryKind { noninformative, informative };

struct AuxiliarySpec {
  int M = 0;
  AuxiliaryKind kind = AuxiliaryKind::noninformative;
  double kappa2 = 0.0;
  double xi = 0.0;
};

VectorXd gen_coefficients(const CoefficientSpec& spec, std::uint64_t seed);

// covariates per the design law; responses Bernoulli(rho'(x_i' beta))
Dataset gen_logistic_data(const DesignSpec& design, const VectorXd& beta,
                          std::uint64_t seed);

// beta_s = xi (kappa2/kappa1) beta0 + kappa2 sqrt(1-xi^2) eps, with eps
// entries i.i.d. scaled t3 of variance 1/p
VectorXd gen_beta_s(const VectorXd& beta0, double kappa2, double xi,
                    std::uint64_t seed);

// noninformative: responses Bernoulli(0.5); informative: Bernoulli(rho'(x'beta_s))
Dataset gen_synthetic(const AuxiliarySpec& aux, const DesignSpec& design,
                      const std::optional<VectorXd>& beta_s, std::uint64_t seed);

// columnwise i.i.d. resampling (with replacement) of observed covariates,
// responses Bernoulli(0.5)
Dataset resample_covariates(const Dataset& observed, int M, std::uint64_t seed);

// AR(1) Toeplitz covariance Sigma_ij = r^|i-j|
MatrixXd toeplitz_ar1(int p, double r);

}  // namespace catmap
