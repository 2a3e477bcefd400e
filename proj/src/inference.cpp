#include "catmap/inference.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "catmap/datagen.hpp"
#include "catmap/errors.hpp"
#include "catmap/tuning.hpp"

namespace catmap {

GDeltaCurve build_gdelta(double delta, double tau0, double m,
                         std::pair<double, double> kappa_range, int n_points,
                         int threads) {
  if (n_points < 2) throw ArgumentError("build_gdelta: need at least 2 grid points");
  if (!(kappa_range.first > 0.0 && kappa_range.second > kappa_range.first))
    throw ArgumentError("build_gdelta: invalid kappa range");
  GDeltaCurve curve;
  curve.delta = delta;
  curve.tau0 = tau0;
  curve.m = m;
  curve.kappa_grid.resize(n_points);
  curve.eta_sq.resize(n_points);
  for (int i = 0; i < n_points; ++i)
    curve.kappa_grid[i] = kappa_range.first +
                          (kappa_range.second - kappa_range.first) * i /
                              (n_points - 1);

  std::vector<std::string> failures(n_points);
  auto solve_point = [&](int i) {
    ScalingParams params;
    params.delta = delta;
    params.tau0 = tau0;
    params.m = m;
    params.kappa1 = curve.kappa_grid[i];
    try {
      ScalarSolution sol = std::isinf(m) ? solve_minfty(params) : solve_3eq(params);
      curve.eta_sq[i] = sol.alpha1 * sol.alpha1 * params.kappa1 * params.kappa1 +
                        sol.sigma * sol.sigma;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  int workers = std::max(1, threads);
  if (workers == 1) {
    for (int i = 0; i < n_points; ++i) solve_point(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n_points; i = next.fetch_add(1))
          solve_point(i);
      });
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < n_points; ++i)
    if (!failures[i].empty())
      throw NumericError("build_gdelta: solver failed at kappa = " +
                         std::to_string(curve.kappa_grid[i]) + ": " + failures[i]);
  for (int i = 1; i < n_points; ++i)
    if (!(curve.eta_sq[i] > curve.eta_sq[i - 1]))
      throw NumericError("build_gdelta: eta^2 is not strictly increasing at kappa = " +
                         std::to_string(curve.kappa_grid[i]));
  return curve;
}

double kappa_from_eta(const GDeltaCurve& curve, double eta_hat) {
  const double target = eta_hat * eta_hat;
  const Eigen::Index n = curve.kappa_grid.size();
  if (target < curve.eta_sq[0] || target > curve.eta_sq[n - 1])
    throw OutOfDictionaryError(
        "kappa_from_eta: eta_hat = " + std::to_string(eta_hat) +
            " is outside the dictionary range [" +
            std::to_string(std::sqrt(curve.eta_sq[0])) + ", " +
            std::to_string(std::sqrt(curve.eta_sq[n - 1])) + "]",
        eta_hat, std::sqrt(curve.eta_sq[0]), std::sqrt(curve.eta_sq[n - 1]));
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    Eigen::Index mid = (lo + hi) / 2;
    if (curve.eta_sq[mid] <= target) lo = mid; else hi = mid;
  }
  double t = (target - curve.eta_sq[lo]) / (curve.eta_sq[hi] - curve.eta_sq[lo]);
  return curve.kappa_grid[lo] + t * (curve.kappa_grid[hi] - curve.kappa_grid[lo]);
}

double estimate_kappa1(const Dataset& observed, double tau0, double m,
                       const GDeltaCurve& curve, const NewtonOptions& fit_opts,
                       std::uint64_t seed) {
  const Eigen::Index n = observed.n(), p = observed.p();
  const double delta = static_cast<double>(n) / static_cast<double>(p);
  if (std::abs(curve.delta - delta) > 1e-8 || curve.tau0 != tau0 || curve.m != m)
    throw ArgumentError("estimate_kappa1: curve was built for different (delta, tau0, m)");
  AuxiliarySpec aux;
  aux.M = static_cast<int>(std::lround(m * static_cast<double>(n)));
  DesignSpec design;
  design.n = aux.M;
  design.p = static_cast<int>(p);
  Dataset synthetic = gen_synthetic(aux, design, std::nullopt, seed);
  MapFit fit = fit_map(observed, synthetic, tau0 * static_cast<double>(n),
                       logistic_family(), fit_opts);
  return kappa_from_eta(curve, fit.beta_hat.norm());
}

AdjustedCI adjusted_cis(const MapFit& fit, int p, double alpha_star,
                        double sigma_star, double level) {
  if (alpha_star == 0.0)
    throw ArgumentError("adjusted_cis: alpha_star = 0 is degenerate");
  if (!(level > 0.0 && level < 1.0))
    throw ArgumentError("adjusted_cis: level must be in (0,1)");
  const double z = norm_quantile(0.5 * (1.0 + level));
  const double half = z * sigma_star / std::sqrt(static_cast<double>(p));
  AdjustedCI ci;
  ci.level = level;
  ci.alpha_star_hat = alpha_star;
  ci.sigma_star_hat = sigma_star;
  ci.lower = ((fit.beta_hat.array() - half) / alpha_star).matrix();
  ci.upper = ((fit.beta_hat.array() + half) / alpha_star).matrix();
  if (alpha_star < 0.0) ci.lower.swap(ci.upper);
  return ci;
}

XiEstimate estimate_xi(const Dataset& target, const Dataset& source, double tau0,
                       int M, std::uint64_t seed,
                       std::optional<std::pair<double, double>> known_kappas,
                       const NewtonOptions& fit_opts) {
  if (target.p() != source.p())
    throw ArgumentError("estimate_xi: target and source must share p");
  const Eigen::Index p = target.p();
  const double n0 = static_cast<double>(target.n());
  const double ns = static_cast<double>(source.n());

  auto fit_with_fresh_synthetic = [&](const Dataset& data, double n,
                                      std::uint64_t s) {
    AuxiliarySpec aux;
    aux.M = M;
    DesignSpec design;
    design.n = M;
    design.p = static_cast<int>(p);
    Dataset synthetic = gen_synthetic(aux, design, std::nullopt, s);
    return fit_map(data, synthetic, tau0 * n, logistic_family(), fit_opts);
  };
  MapFit fit0 = fit_with_fresh_synthetic(target, n0, Rng::mix(seed) + 1);
  MapFit fits = fit_with_fresh_synthetic(source, ns, Rng::mix(seed) + 2);

  const double m0 = static_cast<double>(M) / n0;
  const double ms = static_cast<double>(M) / ns;
  double kappa1, kappa2;
  if (known_kappas) {
    kappa1 = known_kappas->first;
    kappa2 = known_kappas->second;
  } else {
    GDeltaCurve c0 = gdelta_cached(n0 / static_cast<double>(p), tau0, m0);
    GDeltaCurve cs = gdelta_cached(ns / static_cast<double>(p), tau0, ms);
    kappa1 = kappa_from_eta(c0, fit0.beta_hat.norm());
    kappa2 = kappa_from_eta(cs, fits.beta_hat.norm());
  }

  ScalingParams p0{n0 / static_cast<double>(p), tau0, m0, kappa1, 0.0, 0.0};
  ScalingParams ps{ns / static_cast<double>(p), tau0, ms, kappa2, 0.0, 0.0};
  ScalarSolution s0 = solve_3eq(p0);
  ScalarSolution ss = solve_3eq(ps);

  XiEstimate out;
  out.kappa1_hat = kappa1;
  out.kappa2_hat = kappa2;
  double inner = fit0.beta_hat.dot(fits.beta_hat);
  out.xi_hat = inner / (s0.alpha1 * ss.alpha1 * kappa1 * kappa2);
  out.xi_hat = std::clamp(out.xi_hat, -1.0, 1.0);
  out.naive_cosine = inner / (fit0.beta_hat.norm() * fits.beta_hat.norm());
  return out;
}

VectorXd conditional_variances(const MatrixXd& X, VarianceMethod method) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (method == VarianceMethod::nodewise && n <= p)
    throw ArgumentError("conditional_variances: nodewise needs rows > columns");
  MatrixXd G = MatrixXd::Zero(p, p);
  G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  Eigen::LDLT<MatrixXd> ldlt(G.selfadjointView<Eigen::Lower>());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("conditional_variances: singular design");
  MatrixXd Ginv = ldlt.solve(MatrixXd::Identity(p, p));
  VectorXd out(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double gjj = Ginv(j, j);
    if (!(gjj > 0.0))
      throw NumericError("conditional_variances: singular design");
    // RSS of X_j on X_{-j} equals 1/(G^{-1})_jj
    if (method == VarianceMethod::nodewise)
      out[j] = 1.0 / (gjj * static_cast<double>(n - p + 1));
    else
      out[j] = 1.0 / (gjj * static_cast<double>(n));
  }
  return out;
}

double estimate_eta_general(const Dataset& observed, const Dataset& synthetic,
                            const MapFit& fit, double tau) {
  VectorXd l = approx_loo(fit, observed, synthetic, tau);
  const double n = static_cast<double>(l.size());
  double mean = l.sum() / n;
  double mean_sq = l.squaredNorm() / n;
  return std::max(0.0, mean_sq - mean * mean);
}

std::string gdelta_cache_key(double delta, double tau0, double m,
                             std::pair<double, double> kappa_range, int n_points) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "gdelta_d%.6g_t%.6g_m%.6g_r%.6g-%.6g_n%d",
                delta, tau0, m, kappa_range.first, kappa_range.second, n_points);
  return buf;
}

void save_gdelta(const GDeltaCurve& curve, const std::string& path) {
  nlohmann::json j;
  j["delta"] = curve.delta;
  j["tau0"] = curve.tau0;
  j["m"] = std::isinf(curve.m) ? -1.0 : curve.m;
  j["kappa_grid"] = std::vector<double>(curve.kappa_grid.begin(), curve.kappa_grid.end());
  j["eta_sq"] = std::vector<double>(curve.eta_sq.begin(), curve.eta_sq.end());
  std::ofstream out(path);
  if (!out) throw NumericError("save_gdelta: cannot write " + path);
  out << j.dump(2) << "\n";
}

std::optional<GDeltaCurve> load_gdelta(const std::string& path, double delta,
                                       double tau0, double m) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
    GDeltaCurve curve;
    curve.delta = j.at("delta").get<double>();
    curve.tau0 = j.at("tau0").get<double>();
    curve.m = j.at("m").get<double>();
    if (curve.m == -1.0) curve.m = std::numeric_limits<double>::infinity();
    auto kg = j.at("kappa_grid").get<std::vector<double>>();
    auto es = j.at("eta_sq").get<std::vector<double>>();
    if (kg.size() != es.size() || kg.empty()) return std::nullopt;
    curve.kappa_grid = Eigen::Map<VectorXd>(kg.data(), static_cast<Eigen::Index>(kg.size()));
    curve.eta_sq = Eigen::Map<VectorXd>(es.data(), static_cast<Eigen::Index>(es.size()));
    if (std::abs(curve.delta - delta) > 1e-9 || std::abs(curve.tau0 - tau0) > 1e-9)
      return std::nullopt;
    bool want_inf = std::isinf(m), have_inf = std::isinf(curve.m);
    if (want_inf != have_inf || (!want_inf && std::abs(curve.m - m) > 1e-9))
      return std::nullopt;
    return curve;
  } catch (...) {
    return std::nullopt;
  }
}

std::string gdelta_cache_path(double delta, double tau0, double m,
                              std::pair<double, double> kappa_range, int n_points) {
  const char* dir = std::getenv("CATMAP_CACHE_DIR");
  if (!dir || !*dir) return {};
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) /
          (gdelta_cache_key(delta, tau0, m, kappa_range, n_points) + ".json"))
      .string();
}

GDeltaCurve gdelta_cached(double delta, double tau0, double m,
                          std::pair<double, double> kappa_range, int n_points,
                          int threads) {
  std::string path = gdelta_cache_path(delta, tau0, m, kappa_range, n_points);
  if (!path.empty()) {
    if (auto cached = load_gdelta(path, delta, tau0, m)) return *cached;
  }
  GDeltaCurve curve = build_gdelta(delta, tau0, m, kappa_range, n_points, threads);
  if (!path.empty()) save_gdelta(curve, path);
  return curve;
}

}  // namespace catmap
