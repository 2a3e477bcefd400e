#include "catmap/tuning.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <cmath>
#include <thread>

#include "catmap/errors.hpp"

namespace catmap {

VectorXd approx_loo(const MapFit& fit, const Dataset& observed,
                    const Dataset& synthetic, double tau) {
  const GlmFamily& family = logistic_family();
  ObjectiveEval eval =
      weighted_objective(family, observed, synthetic, fit.beta_hat, tau);
  Eigen::LLT<MatrixXd> llt(eval.hessian);
  if (llt.info() != Eigen::Success)
    throw NumericError("approx_loo: singular Hessian");

  const Eigen::Index n = observed.n();
  VectorXd t = observed.covariates * fit.beta_hat;
  // h_i = x_i' H^{-1} x_i for the full positive-definite Hessian H
  MatrixXd solved = llt.solve(observed.covariates.transpose());
  VectorXd l(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double h = observed.covariates.row(i).dot(solved.col(i));
    double d = rho2(t[i]);
    double denom = 1.0 - d * h;
    if (denom <= 0.0)
      throw NumericError("approx_loo: rank-one downdate lost positive definiteness");
    // x_i'(H - d x_i x_i')^{-1} x_i = h / (1 - d h)
    l[i] = t[i] - (h / denom) * (observed.responses[i] - rho1(t[i]));
  }
  return l;
}

double loocv_score(const VectorXd& l_tilde, const VectorXd& responses) {
  if (l_tilde.size() != responses.size())
    throw ArgumentError("loocv_score: length mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < l_tilde.size(); ++i)
    s += rho(l_tilde[i]) - responses[i] * l_tilde[i];
  return s;
}

namespace {

int argmin_small_tie(const std::vector<double>& scores,
                     const std::vector<bool>& valid) {
  int best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!valid[i]) continue;
    if (best < 0 || scores[i] < scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void run_indexed(int count, int threads, const std::function<void(int)>& work) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, count); ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

TauGrid select_tau_mlcv(const Dataset& observed, const Dataset& synthetic,
                        const std::vector<double>& grid,
                        const NewtonOptions& opts, int threads) {
  if (grid.empty()) throw ArgumentError("select_tau_mlcv: empty grid");
  TauGrid out;
  out.values = grid;
  out.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> valid(grid.size(), false);
  std::vector<std::string> errors(grid.size());
  run_indexed(static_cast<int>(grid.size()), threads, [&](int i) {
    try {
      MapFit fit = fit_map(observed, synthetic, grid[static_cast<std::size_t>(i)],
                           logistic_family(), opts);
      VectorXd l = approx_loo(fit, observed, synthetic, grid[static_cast<std::size_t>(i)]);
      out.scores[static_cast<std::size_t>(i)] = loocv_score(l, observed.responses);
      valid[static_cast<std::size_t>(i)] = true;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  out.chosen = argmin_small_tie(out.scores, valid);
  if (out.chosen < 0)
    throw NumericError("select_tau_mlcv: every grid fit failed; first error: " +
                       errors.front());
  return out;
}

TauGrid select_tau_ese(const ScalingParams& params_base, double kappa,
                       const std::vector<double>& grid_tau0, bool informative,
                       int threads, std::vector<std::string>* warnings) {
  if (grid_tau0.empty()) throw ArgumentError("select_tau_ese: empty grid");
  if (!(kappa > 0.0)) throw ArgumentError("select_tau_ese: kappa must be positive");
  TauGrid out;
  out.values = grid_tau0;
  out.scores.assign(grid_tau0.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> valid(grid_tau0.size(), false);
  std::vector<std::string> errors(grid_tau0.size());
  run_indexed(static_cast<int>(grid_tau0.size()), threads, [&](int i) {
    ScalingParams params = params_base;
    params.kappa1 = kappa;
    params.tau0 = grid_tau0[static_cast<std::size_t>(i)];
    if (!informative) {
      params.kappa2 = 0.0;
      params.xi = 0.0;
    }
    try {
      ScalarSolution sol;
      if (std::isinf(params.m))
        sol = solve_minfty(params);
      else if (informative)
        sol = solve_4eq(params);
      else
        sol = solve_3eq(params);
      out.scores[static_cast<std::size_t>(i)] = limit_metrics(sol, params).mse;
      valid[static_cast<std::size_t>(i)] = true;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  if (warnings)
    for (std::size_t i = 0; i < errors.size(); ++i)
      if (!errors[i].empty())
        warnings->push_back("tau0 = " + std::to_string(grid_tau0[i]) +
                            " skipped: " + errors[i]);
  out.chosen = argmin_small_tie(out.scores, valid);
  if (out.chosen < 0)
    throw NumericError("select_tau_ese: every grid point failed; first error: " +
                       errors.front());
  return out;
}

std::vector<double> default_tau0_grid() {
  std::vector<double> grid(12);
  const double lo = std::log(0.02), hi = std::log(2.0);
  for (int i = 0; i < 12; ++i)
    grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / 11.0);
  return grid;
}

}  // namespace catmap
