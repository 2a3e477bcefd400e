#pragma once

#include <vector>

#include "catmap/asymptotics.hpp"
#include "catmap/glm.hpp"
#include "catmap/newton.hpp"

namespace catmap {

struct TauGrid {
  std::vector<double> values;  // tau, absolute scale, increasing
  std::vector<double> scores;  // VE or estimated limit MSE
  int chosen = -1;             // argmin; ties go to the smaller tau
};

// Leave-one-out linear predictors l_i ~ x_i' beta_{-i} through one full
// Hessian factorization plus Sherman-Morrison rank-one downdates.
VectorXd approx_loo(const MapFit& fit, const Dataset& observed,
                    const Dataset& synthetic, double tau);

// deviance at the leave-one-out predictors: -sum_i [y_i l_i - rho(l_i)]
double loocv_score(const VectorXd& l_tilde, const VectorXd& responses);

// approximated-LOOCV selection: one cold fit per grid value
TauGrid select_tau_mlcv(const Dataset& observed, const Dataset& synthetic,
                        const std::vector<double>& grid,
                        const NewtonOptions& opts = {}, int threads = 1);

// theoretical-limit selection: per tau0 solve the scalar system at the given
// kappa (kappa1_hat for MESE, the true kappa1 for MTSE) and take the MSE
// minimizer; informative uses the four-variable system with params_base's
// (kappa2, xi)
TauGrid select_tau_ese(const ScalingParams& params_base, double kappa,
                       const std::vector<double>& grid_tau0, bool informative,
                       int threads = 1,
                       std::vector<std::string>* warnings = nullptr);

// default 12-point log-spaced tau0 grid on [0.02, 2]
std::vector<double> default_tau0_grid();

}  // namespace catmap
