#pragma once

namespace catmap {

struct ProxResult {
  double t;         // Prox_{lambda rho}(z)
  double residual;  // |t + lambda rho'(t) - z|
  int iterations;
};

// Proximal operator of the scaled logistic log-partition: the unique root of
// t + lambda rho'(t) = z, by Newton safeguarded with the bracket [z-lambda, z].
ProxResult prox_rho(double z, double lambda);

// bare value, for hot loops
double prox_rho_value(double z, double lambda);

// Moreau envelope rho(t*) + (t*-z)^2/(2 lambda) with t* = prox_rho(z, lambda)
double moreau_rho(double z, double lambda);

}  // namespace catmap
