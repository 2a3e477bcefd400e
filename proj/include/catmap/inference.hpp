#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "catmap/asymptotics.hpp"
#include "catmap/glm.hpp"
#include "catmap/newton.hpp"

namespace catmap {

// dictionary eta_M = g_delta(kappa): limiting MAP norm per signal strength
struct GDeltaCurve {
  double delta;
  double tau0;
  double m;
  VectorXd kappa_grid;  // increasing
  VectorXd eta_sq;      // alpha*^2 kappa^2 + sigma*^2 per grid point
};

GDeltaCurve build_gdelta(double delta, double tau0, double m,
                         std::pair<double, double> kappa_range = {0.05, 4.0},
                         int n_points = 60, int threads = 1);

// monotone piecewise-linear inversion of g_delta at eta_hat; throws
// OutOfDictionaryError outside the curve range
double kappa_from_eta(const GDeltaCurve& curve, double eta_hat);

// Fit the MAP on freshly generated non-informative synthetic data of size
// M = m*n with tau = tau0*n, then invert the dictionary at ||beta_hat||.
double estimate_kappa1(const Dataset& observed, double tau0, double m,
                       const GDeltaCurve& curve, const NewtonOptions& fit_opts,
                       std::uint64_t seed);

struct AdjustedCI {
  VectorXd lower;
  VectorXd upper;
  double level;
  double alpha_star_hat;
  double sigma_star_hat;
};

AdjustedCI adjusted_cis(const MapFit& fit, int p, double alpha_star,
                        double sigma_star, double level = 0.95);

// Similarity estimate between the coefficient vectors behind two datasets:
// independent synthetic sets, one MAP fit per dataset, kappas from the
// dictionary unless supplied, then
// xi_hat = <beta1, beta2> / (alpha1* alpha2* kappa1 kappa2), clamped to [-1,1].
struct XiEstimate {
  double xi_hat;
  double naive_cosine;  // plain cosine of the two MAP fits
  double kappa1_hat;
  double kappa2_hat;
};

XiEstimate estimate_xi(const Dataset& target, const Dataset& source, double tau0,
                       int M, std::uint64_t seed,
                       std::optional<std::pair<double, double>> known_kappas = {},
                       const NewtonOptions& fit_opts = {});

enum class VarianceMethod { nodewise, precision_diag };

// v_j^2 estimating Var(X_j | X_-j): node-wise least squares RSS with the
// n - p + 1 divisor, or the inverse sample-covariance diagonal
VectorXd conditional_variances(const MatrixXd& X, VarianceMethod method);

// Leave-one-out variance estimate of the linear predictor, the general-
// covariance signal-strength surrogate ||Sigma^{1/2} beta||^2
double estimate_eta_general(const Dataset& observed, const Dataset& synthetic,
                            const MapFit& fit, double tau);

// JSON cache round trip for curves, keyed by (delta, tau0, m, grid)
std::string gdelta_cache_key(double delta, double tau0, double m,
                             std::pair<double, double> kappa_range, int n_points);
void save_gdelta(const GDeltaCurve& curve, const std::string& path);
std::optional<GDeltaCurve> load_gdelta(const std::string& path, double delta,
                                       double tau0, double m);
// resolves CATMAP_CACHE_DIR; empty when caching is disabled
std::string gdelta_cache_path(double delta, double tau0, double m,
                              std::pair<double, double> kappa_range, int n_points);

// curve through the cache when CATMAP_CACHE_DIR is set
GDeltaCurve gdelta_cached(double delta, double tau0, double m,
                          std::pair<double, double> kappa_range = {0.05, 4.0},
                          int n_points = 60, int threads = 1);

}  // namespace catmap
