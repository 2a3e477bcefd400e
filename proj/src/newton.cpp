#include "catmap/newton.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "catmap/errors.hpp"
#include "catmap/rng.hpp"

namespace catmap {

MapFit newton_minimize(Eigen::Index p, const NewtonCallbacks& cb,
                       const NewtonOptions& opts, double tau) {
  VectorXd beta = opts.initial ? *opts.initial : VectorXd::Zero(p);
  if (beta.size() != p)
    throw ArgumentError("newton_minimize: initial point has wrong dimension");

  VectorXd grad(p);
  MatrixXd hess(p, p);
  Eigen::LLT<MatrixXd> llt;
  double value = cb.value_grad(beta, grad);
  double grad_inf = grad.lpNorm<Eigen::Infinity>();

  MapFit fit;
  fit.tau = tau;
  bool have_factorization = false;
  int reuse_streak = 0;
  double max_ridge_used = 0.0;

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (grad_inf <= opts.grad_tol) {
      fit.converged = true;
      break;
    }
    if (!have_factorization) {
      cb.value_grad_hess(beta, grad, hess);
      double ridge = 0.0;
      llt.compute(hess);
      while (llt.info() != Eigen::Success) {
        ridge = (ridge == 0.0) ? opts.ridge_floor : ridge * 10.0;
        if (ridge > 1e-4)
          throw NumericError("newton_minimize: Hessian factorization failed even with ridge 1e-4");
        llt.compute(hess + ridge * MatrixXd::Identity(p, p));
      }
      max_ridge_used = std::max(max_ridge_used, ridge);
      have_factorization = true;
      reuse_streak = 0;
    }

    VectorXd step = llt.solve(-grad);
    double slope = grad.dot(step);
    if (slope >= 0.0) {
      // stale factorization no longer a descent direction; rebuild
      if (reuse_streak > 0) {
        have_factorization = false;
        --it;
        continue;
      }
      throw NumericError("newton_minimize: Newton direction is not a descent direction");
    }

    double t = 1.0;
    double new_value = 0.0;
    VectorXd candidate;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      candidate = beta + t * step;
      new_value = cb.value(candidate);
      if (std::isfinite(new_value) &&
          new_value <= value + opts.armijo_c * t * slope) {
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted)
      throw ConvergenceError("newton_minimize: line search failed", beta, grad_inf);

    beta = candidate;
    double prev_grad_inf = grad_inf;
    value = cb.value_grad(beta, grad);
    grad_inf = grad.lpNorm<Eigen::Infinity>();

    if (beta.norm() > opts.divergence_norm)
      throw ExistenceError(
          "newton_minimize: iterates diverge; the combined data appear "
          "separable, so no finite MAP optimum exists");

    // keep the factorization only while full steps contract the gradient fast
    bool keep = opts.reuse_factorization && t == 1.0 &&
                grad_inf <= 0.25 * prev_grad_inf && reuse_streak < 8;
    if (keep)
      ++reuse_streak;
    else
      have_factorization = false;
  }

  if (!fit.converged && grad_inf <= opts.grad_tol) fit.converged = true;
  if (!fit.converged)
    throw ConvergenceError("newton_minimize: no convergence after max_iter",
                           beta, grad_inf);

  fit.beta_hat = std::move(beta);
  fit.iterations = it;
  fit.objective = value;
  fit.gradient_norm = grad_inf;
  if (max_ridge_used > 0.0)
    fit.warnings.push_back(
        "Hessian needed a diagonal ridge of " + std::to_string(max_ridge_used) +
        "; the problem is near-singular (possibly near-separable synthetic data)");
  return fit;
}

MapFit fit_map(const Dataset& observed, const Dataset& synthetic, double tau,
               const GlmFamily& family, const NewtonOptions& opts) {
  validate_dataset(observed, family);
  if (synthetic.n() > 0) validate_dataset(synthetic, family);
  if (tau < 0.0) throw ArgumentError("fit_map: tau must be >= 0");
  if (tau == 0.0) {
    if (observed.p() >= observed.n())
      throw ArgumentError("fit_map: tau = 0 with p >= n has no MLE");
    if (family.name == "logistic" &&
        check_separable(observed) == Separability::separable)
      throw ExistenceError("fit_map: tau = 0 on separable data has no finite optimum");
  }

  NewtonCallbacks cb;
  cb.value = [&](const VectorXd& b) {
    return weighted_objective_value(family, observed, synthetic, b, tau);
  };
  cb.value_grad = [&](const VectorXd& b, VectorXd& g) {
    // gradient without the Hessian: assemble directly
    g.setZero();
    VectorXd t = observed.covariates * b;
    double value = 0.0;
    VectorXd r(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      value += family.b(t[i]) - observed.responses[i] * t[i];
      r[i] = family.b1(t[i]) - observed.responses[i];
    }
    g.noalias() = observed.covariates.transpose() * r;
    if (tau > 0.0 && synthetic.n() > 0) {
      double w = tau / static_cast<double>(synthetic.n());
      VectorXd ts = synthetic.covariates * b;
      VectorXd rs(ts.size());
      for (Eigen::Index i = 0; i < ts.size(); ++i) {
        value += w * (family.b(ts[i]) - synthetic.responses[i] * ts[i]);
        rs[i] = family.b1(ts[i]) - synthetic.responses[i];
      }
      g.noalias() += w * (synthetic.covariates.transpose() * rs);
    }
    return value;
  };
  cb.value_grad_hess = [&](const VectorXd& b, VectorXd& g, MatrixXd& h) {
    ObjectiveEval eval = weighted_objective(family, observed, synthetic, b, tau);
    g = std::move(eval.gradient);
    h = std::move(eval.hessian);
    return eval.value;
  };
  return newton_minimize(observed.p(), cb, opts, tau);
}

namespace {

// Gaussian noninformative penalty pen(r) = E[rho(r Z)] and its first two
// radial derivatives, by 1-D quadrature
struct RadialPenalty {
  double value, d1, d2;
};

RadialPenalty radial_penalty(double r, const QuadratureGrid& quad) {
  RadialPenalty out{0.0, 0.0, 0.0};
  const int n = quad.nodes_per_axis;
  std::vector<double> v(n), g(n), h(n);
  for (int i = 0; i < n; ++i) {
    double z = quad.nodes[i];
    double t = r * z;
    v[i] = quad.weights[i] * rho(t);
    g[i] = quad.weights[i] * rho1(t) * z;
    h[i] = quad.weights[i] * rho2(t) * z * z;
  }
  out.value = pairwise_sum(v.data(), n);
  out.d1 = pairwise_sum(g.data(), n);
  out.d2 = pairwise_sum(h.data(), n);
  return out;
}

}  // namespace

MapFit fit_map_population(const Dataset& observed, double tau,
                          const NewtonOptions& opts, const QuadratureGrid& quad) {
  const GlmFamily& family = logistic_family();
  validate_dataset(observed, family);
  if (tau < 0.0) throw ArgumentError("fit_map_population: tau must be >= 0");
  if (quad.dimension != 1)
    throw ArgumentError("fit_map_population: quadrature grid must be 1-D");
  const Dataset empty{MatrixXd(0, observed.p()), VectorXd(0), Role::synthetic};
  constexpr double kTinyNorm = 1e-9;

  NewtonCallbacks cb;
  cb.value = [&](const VectorXd& b) {
    double base = weighted_objective_value(family, observed, empty, b, 0.0);
    return base + tau * radial_penalty(b.norm(), quad).value;
  };
  cb.value_grad = [&](const VectorXd& b, VectorXd& g) {
    VectorXd t = observed.covariates * b;
    double value = 0.0;
    VectorXd r(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      value += rho(t[i]) - observed.responses[i] * t[i];
      r[i] = rho1(t[i]) - observed.responses[i];
    }
    g.noalias() = observed.covariates.transpose() * r;
    double norm = b.norm();
    RadialPenalty pen = radial_penalty(norm, quad);
    value += tau * pen.value;
    if (norm > kTinyNorm) g.noalias() += (tau * pen.d1 / norm) * b;
    return value;
  };
  cb.value_grad_hess = [&](const VectorXd& b, VectorXd& g, MatrixXd& h) {
    ObjectiveEval eval = weighted_objective(family, observed, empty, b, 0.0);
    g = std::move(eval.gradient);
    h = std::move(eval.hessian);
    double norm = b.norm();
    RadialPenalty pen = radial_penalty(norm, quad);
    if (norm > kTinyNorm) {
      VectorXd u = b / norm;
      g.noalias() += (tau * pen.d1) * u;
      double radial = tau * pen.d2;
      double tangential = tau * pen.d1 / norm;
      h.noalias() += (radial - tangential) * (u * u.transpose());
      h.diagonal().array() += tangential;
    } else {
      // analytic limit at beta = 0: zero gradient, curvature rho''(0) = 1/4
      h.diagonal().array() += tau * 0.25;
    }
    return eval.value + tau * pen.value;
  };
  return newton_minimize(observed.p(), cb, opts, tau);
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>
split_indices(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> perm(n);
  for (Eigen::Index i = 0; i < n; ++i) perm[i] = i;
  Rng rng = Rng::child(seed, 0);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  const Eigen::Index first = (n + 1) / 2;
  std::vector<Eigen::Index> a(perm.begin(), perm.begin() + first);
  std::vector<Eigen::Index> b(perm.begin() + first, perm.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {std::move(a), std::move(b)};
}

Dataset subset_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.covariates.resize(static_cast<Eigen::Index>(rows.size()), data.p());
  out.responses.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.covariates.row(static_cast<Eigen::Index>(k)) = data.covariates.row(rows[k]);
    out.responses[static_cast<Eigen::Index>(k)] = data.responses[rows[k]];
  }
  out.role = data.role;
  return out;
}

std::pair<MapFit, MapFit> split_fit(const Dataset& observed,
                                    const TauRule& tau_rule,
                                    const AuxBuilder& aux_builder,
                                    std::uint64_t seed, const GlmFamily& family,
                                    const NewtonOptions& opts) {
  auto [idx1, idx2] = split_indices(observed.n(), seed);
  Dataset half1 = subset_rows(observed, idx1);
  Dataset half2 = subset_rows(observed, idx2);
  Dataset syn1 = aux_builder(half1, Rng::mix(seed ^ 0x517cc1b727220a95ULL) + 1);
  Dataset syn2 = aux_builder(half2, Rng::mix(seed ^ 0x517cc1b727220a95ULL) + 2);
  MapFit fit1 = fit_map(half1, syn1, tau_rule(half1.n()), family, opts);
  MapFit fit2 = fit_map(half2, syn2, tau_rule(half2.n()), family, opts);
  return {std::move(fit1), std::move(fit2)};
}

}  // namespace catmap
