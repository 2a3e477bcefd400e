#include "catmap/prox.hpp"

#include <algorithm>
#include <cmath>

#include "catmap/errors.hpp"
#include "catmap/glm.hpp"

namespace catmap {

namespace {
constexpr double kTol = 1e-12;
constexpr int kMaxIter = 200;
}  // namespace

ProxResult prox_rho(double z, double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("prox_rho: lambda must be >= 0");
  if (!std::isfinite(z)) throw ArgumentError("prox_rho: z must be finite");
  if (lambda == 0.0) return {z, 0.0, 0};

  double lo = z - lambda, hi = z;
  double t = z - lambda * rho1(z);  // one fixed-point step from z
  int it = 0;
  double g = 0.0;
  for (; it < kMaxIter; ++it) {
    double p = rho1(t);
    g = t + lambda * p - z;
    if (std::abs(g) <= kTol) break;
    if (g > 0.0) hi = t; else lo = t;
    double step = g / (1.0 + lambda * p * (1.0 - p));
    double tn = t - step;
    if (tn <= lo || tn >= hi) tn = 0.5 * (lo + hi);  // bisection safeguard
    t = tn;
  }
  return {t, std::abs(g), it};
}

double prox_rho_value(double z, double lambda) {
  if (lambda == 0.0) return z;
  double lo = z - lambda, hi = z;
  double t = z - lambda * rho1(z);
  for (int it = 0; it < kMaxIter; ++it) {
    double p = rho1(t);
    double g = t + lambda * p - z;
    if (std::abs(g) <= kTol) break;
    if (g > 0.0) hi = t; else lo = t;
    double tn = t - g / (1.0 + lambda * p * (1.0 - p));
    if (tn <= lo || tn >= hi) tn = 0.5 * (lo + hi);
    t = tn;
  }
  return t;
}

double moreau_rho(double z, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("moreau_rho: lambda must be > 0");
  double t = prox_rho_value(z, lambda);
  double d = t - z;
  return rho(t) + d * d / (2.0 * lambda);
}

}  // namespace catmap
