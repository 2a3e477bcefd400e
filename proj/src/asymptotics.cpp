#include "catmap/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "catmap/errors.hpp"
#include "catmap/glm.hpp"
#include "catmap/prox.hpp"

namespace catmap {

namespace {

constexpr double kSigmaLo = 1e-6, kSigmaHi = 50.0;
constexpr double kGammaLo = 1e-6, kGammaHi = 100.0;

double prox_warm(double z, double lam, double t0) {
  double lo = z - lam, hi = z;
  double t = std::clamp(t0, lo, hi);
  for (int it = 0; it < 100; ++it) {
    double p = rho1(t);
    double g = t + lam * p - z;
    if (std::abs(g) <= 1e-12) break;
    if (g > 0.0) hi = t; else lo = t;
    double tn = t - g / (1.0 + lam * p * (1.0 - p));
    if (tn <= lo || tn >= hi) tn = 0.5 * (lo + hi);
    t = tn;
  }
  return t;
}

// guarded root-find (secant with bisection fallback) for an increasing-in-gamma
// residual; bracket grown geometrically from the warm start
double solve_gamma_root(const std::function<double(double)>& r,
                        double gamma_start) {
  double a = std::clamp(gamma_start / 2.0, kGammaLo, kGammaHi);
  double b = std::clamp(gamma_start * 2.0, kGammaLo, kGammaHi);
  double fa = r(a), fb = r(b);
  int grow = 0;
  while (fa * fb > 0.0 && grow++ < 60) {
    if (std::abs(fa) < std::abs(fb)) {
      a = std::max(a / 2.0, kGammaLo);
      fa = r(a);
      if (a == kGammaLo && fa * fb > 0.0 && fb < 0.0) break;
    } else {
      b = std::min(b * 2.0, kGammaHi);
      fb = r(b);
      if (b == kGammaHi && fa * fb > 0.0 && fa > 0.0) break;
    }
    if (a == kGammaLo && b == kGammaHi) break;
  }
  if (fa * fb > 0.0)
    return std::abs(fa) < std::abs(fb) ? a : b;  // no sign change on the domain
  for (int it = 0; it < 200; ++it) {
    if (b - a < 1e-12 * std::max(1.0, b)) break;
    double mid;
    double denom = fb - fa;
    if (std::abs(denom) > 0.0) {
      mid = a - fa * (b - a) / denom;  // secant
      double margin = 0.01 * (b - a);
      if (!(mid > a + margin && mid < b - margin)) mid = 0.5 * (a + b);
    } else {
      mid = 0.5 * (a + b);
    }
    double fm = r(mid);
    if (fm == 0.0) return mid;
    if (fa * fm < 0.0) {
      b = mid;
      fb = fm;
    } else {
      a = mid;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

struct NodeTables2d {
  std::vector<double> z1, z2, w, rho1_neg, rho2_k;  // rho'(-k1 z1), rho''(k1 z1)
  long size = 0;
};

NodeTables2d make_tables_2d(const QuadratureGrid& grid, double kappa1) {
  const int n = grid.nodes_per_axis;
  NodeTables2d t;
  t.size = static_cast<long>(n) * n;
  t.z1.resize(t.size);
  t.z2.resize(t.size);
  t.w.resize(t.size);
  t.rho1_neg.resize(t.size);
  t.rho2_k.resize(t.size);
  long k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j, ++k) {
      t.z1[k] = grid.nodes[i];
      t.z2[k] = grid.nodes[j];
      t.w[k] = grid.weights[i] * grid.weights[j];
      t.rho1_neg[k] = rho1(-kappa1 * grid.nodes[i]);
      t.rho2_k[k] = rho2(kappa1 * grid.nodes[i]);
    }
  return t;
}

struct NodeTables3d {
  std::vector<double> z1, z2, z3, w, rho1_neg, rho2_k, rho1_aux, rho2_aux;
  long size = 0;
};

NodeTables3d make_tables_3d(const QuadratureGrid& grid, double kappa1,
                            double kappa2, double xi) {
  const int n = grid.nodes_per_axis;
  NodeTables3d t;
  t.size = static_cast<long>(n) * n * n;
  for (auto* v : {&t.z1, &t.z2, &t.z3, &t.w, &t.rho1_neg, &t.rho2_k,
                  &t.rho1_aux, &t.rho2_aux})
    v->resize(t.size);
  const double c1 = kappa2 * xi;
  const double c2 = kappa2 * std::sqrt(std::max(0.0, 1.0 - xi * xi));
  long k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l, ++k) {
        t.z1[k] = grid.nodes[i];
        t.z2[k] = grid.nodes[j];
        t.z3[k] = grid.nodes[l];
        t.w[k] = grid.weights[i] * grid.weights[j] * grid.weights[l];
        t.rho1_neg[k] = rho1(-kappa1 * grid.nodes[i]);
        t.rho2_k[k] = rho2(kappa1 * grid.nodes[i]);
        double u = -c1 * grid.nodes[i] - c2 * grid.nodes[j];
        t.rho1_aux[k] = rho1(u);
        t.rho2_aux[k] = rho2(u);  // rho'' is even
      }
  return t;
}

// the five expectations of the finite-m three-variable system
struct Terms3 {
  double e1a, e1b, e2a, e2b, e3;
};

class Sys3 {
 public:
  Sys3(const ScalingParams& params, const QuadratureGrid& grid)
      : p_(params), t_(make_tables_2d(grid, params.kappa1)) {
    prox_g_.assign(t_.size, 0.0);
    prox_g0_.assign(t_.size, 0.0);
    buf_.resize(t_.size);
  }

  Terms3 eval(double alpha, double sigma, double gamma) {
    const double gamma0 = p_.tau0 * gamma / p_.m;
    const double k1 = p_.kappa1;
    std::vector<double>&b = buf_;
    double e1a, e1b, e2a, e2b, e3;
    for (long k = 0; k < t_.size; ++k) {
      double W = k1 * alpha * t_.z1[k] + sigma * t_.z2[k];
      prox_g_[k] = prox_warm(W, gamma, prox_g_[k]);
      prox_g0_[k] = prox_warm(W, gamma0, prox_g0_[k]);
    }
    for (long k = 0; k < t_.size; ++k) {
      double W = k1 * alpha * t_.z1[k] + sigma * t_.z2[k];
      double d = W - prox_g_[k];
      b[k] = t_.w[k] * t_.rho1_neg[k] * d * d;
    }
    e1a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k) {
      double W = k1 * alpha * t_.z1[k] + sigma * t_.z2[k];
      double d = W - prox_g0_[k];
      b[k] = t_.w[k] * 0.5 * d * d;
    }
    e1b = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * 2.0 * t_.rho1_neg[k] / (1.0 + gamma * rho2(prox_g_[k]));
    e2a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k) {
      double r2p = rho2(prox_g0_[k]);
      b[k] = t_.w[k] * gamma * p_.tau0 * r2p / (1.0 + gamma0 * r2p);
    }
    e2b = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * t_.rho2_k[k] * prox_g_[k];
    e3 = pairwise_sum(b.data(), t_.size);
    return {e1a, e1b, e2a, e2b, e3};
  }

  Eigen::Vector3d residuals(const Eigen::Vector3d& s) {
    Terms3 T = eval(s[0], s[1], s[2]);
    const double delta = p_.delta;
    return {s[1] * s[1] / (2.0 * delta) - T.e1a - p_.m * T.e1b,
            (1.0 - 1.0 / delta) - T.e2a + T.e2b,
            -s[0] / (2.0 * delta) - T.e3};
  }

  Eigen::Vector3d propose(const Eigen::Vector3d& s) {
    Terms3 T = eval(s[0], s[1], s[2]);
    const double delta = p_.delta;
    double sigma_new =
        std::sqrt(std::max(2.0 * delta * (T.e1a + p_.m * T.e1b), 1e-14));
    double alpha_new = -2.0 * delta * T.e3;
    double gamma_new = solve_gamma_root(
        [&](double g) {
          Terms3 Tg = eval(s[0], s[1], g);
          return (Tg.e2a - Tg.e2b) - (1.0 - 1.0 / delta);
        },
        s[2]);
    return {alpha_new, sigma_new, gamma_new};
  }

 private:
  ScalingParams p_;
  NodeTables2d t_;
  std::vector<double> prox_g_, prox_g0_, buf_;
};

class SysMinfty3 {
 public:
  SysMinfty3(const ScalingParams& params, const QuadratureGrid& grid)
      : p_(params), t_(make_tables_2d(grid, params.kappa1)) {
    prox_g_.assign(t_.size, 0.0);
    buf_.resize(t_.size);
  }

  struct Terms {
    double e1, e2a, e2b, e3;
  };

  Terms eval(double alpha, double sigma, double gamma) {
    const double k1 = p_.kappa1;
    std::vector<double>& b = buf_;
    for (long k = 0; k < t_.size; ++k) {
      double W = k1 * alpha * t_.z1[k] + sigma * t_.z2[k];
      prox_g_[k] = prox_warm(W, gamma, prox_g_[k]);
    }
    double e1, e2a, e2b, e3;
    for (long k = 0; k < t_.size; ++k) {
      double W = k1 * alpha * t_.z1[k] + sigma * t_.z2[k];
      double d = W - prox_g_[k];
      b[k] = t_.w[k] * t_.rho1_neg[k] * d * d;
    }
    e1 = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * 2.0 * t_.rho1_neg[k] / (1.0 + gamma * rho2(prox_g_[k]));
    e2a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k) {
      double W = k1 * alpha * t_.z1[k] + sigma * t_.z2[k];
      b[k] = t_.w[k] * rho2(W);
    }
    e2b = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * t_.rho2_k[k] * prox_g_[k];
    e3 = pairwise_sum(b.data(), t_.size);
    return {e1, e2a, e2b, e3};
  }

  Eigen::Vector3d residuals(const Eigen::Vector3d& s) {
    Terms T = eval(s[0], s[1], s[2]);
    const double delta = p_.delta;
    return {s[1] * s[1] / (2.0 * delta) - T.e1,
            (1.0 - 1.0 / delta) - T.e2a + s[2] * p_.tau0 * T.e2b,
            -s[0] / (2.0 * delta) - T.e3};
  }

  Eigen::Vector3d propose(const Eigen::Vector3d& s) {
    Terms T = eval(s[0], s[1], s[2]);
    const double delta = p_.delta;
    double sigma_new = std::sqrt(std::max(2.0 * delta * T.e1, 1e-14));
    double alpha_new = -2.0 * delta * T.e3;
    double gamma_new = solve_gamma_root(
        [&](double g) {
          Terms Tg = eval(s[0], s[1], g);
          return (Tg.e2a - g * p_.tau0 * Tg.e2b) - (1.0 - 1.0 / delta);
        },
        s[2]);
    return {alpha_new, sigma_new, gamma_new};
  }

 private:
  ScalingParams p_;
  NodeTables2d t_;
  std::vector<double> prox_g_, buf_;
};

struct Terms4 {
  double e1a, e1b, e2a, e2b, e3a, e34aux;
};

class Sys4 {
 public:
  Sys4(const ScalingParams& params, const QuadratureGrid& grid)
      : p_(params),
        t_(make_tables_3d(grid, params.kappa1, params.kappa2, params.xi)) {
    prox_g_.assign(t_.size, 0.0);
    prox_g0_.assign(t_.size, 0.0);
    buf_.resize(t_.size);
    w_.resize(t_.size);
  }

  Terms4 eval(const Eigen::Vector4d& s, double gamma) {
    const double gamma0 = p_.tau0 * gamma / p_.m;
    const double k1 = p_.kappa1, k2 = p_.kappa2;
    std::vector<double>& b = buf_;
    for (long k = 0; k < t_.size; ++k) {
      w_[k] = k1 * s[0] * t_.z1[k] + k2 * s[1] * t_.z2[k] + s[2] * t_.z3[k];
      prox_g_[k] = prox_warm(w_[k], gamma, prox_g_[k]);
      prox_g0_[k] = prox_warm(w_[k], gamma0, prox_g0_[k]);
    }
    Terms4 T;
    for (long k = 0; k < t_.size; ++k) {
      double d = w_[k] - prox_g_[k];
      b[k] = t_.w[k] * t_.rho1_neg[k] * d * d;
    }
    T.e1a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k) {
      double d = w_[k] - prox_g0_[k];
      b[k] = t_.w[k] * t_.rho1_aux[k] * d * d;
    }
    T.e1b = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * 2.0 * t_.rho1_neg[k] / (1.0 + gamma * rho2(prox_g_[k]));
    T.e2a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * 2.0 * t_.rho1_aux[k] / (1.0 + gamma0 * rho2(prox_g0_[k]));
    T.e2b = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * t_.rho2_k[k] * prox_g_[k];
    T.e3a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * t_.rho2_aux[k] * prox_g0_[k];
    T.e34aux = pairwise_sum(b.data(), t_.size);
    return T;
  }

  Eigen::Vector4d residuals(const Eigen::Vector4d& s) {
    Terms4 T = eval(s, s[3]);
    const double delta = p_.delta, m = p_.m;
    const double k_ratio = p_.kappa2 / p_.kappa1;
    const double root = std::sqrt(std::max(0.0, 1.0 - p_.xi * p_.xi));
    return {s[2] * s[2] / (2.0 * delta) - T.e1a - m * T.e1b,
            (1.0 - 1.0 / delta + m) - T.e2a - m * T.e2b,
            -s[0] / (2.0 * delta) - T.e3a - m * p_.xi * k_ratio * T.e34aux,
            -s[1] / (2.0 * delta) - m * root * T.e34aux};
  }

  Eigen::Vector4d propose(const Eigen::Vector4d& s) {
    Terms4 T = eval(s, s[3]);
    const double delta = p_.delta, m = p_.m;
    const double k_ratio = p_.kappa2 / p_.kappa1;
    const double root = std::sqrt(std::max(0.0, 1.0 - p_.xi * p_.xi));
    double sigma_new =
        std::sqrt(std::max(2.0 * delta * (T.e1a + m * T.e1b), 1e-14));
    double a1_new = -2.0 * delta * (T.e3a + m * p_.xi * k_ratio * T.e34aux);
    double a2_new = -2.0 * delta * m * root * T.e34aux;
    double gamma_new = solve_gamma_root(
        [&](double g) {
          Terms4 Tg = eval(s, g);
          return (Tg.e2a + m * Tg.e2b) - (1.0 - 1.0 / delta + m);
        },
        s[3]);
    return {a1_new, a2_new, sigma_new, gamma_new};
  }

 private:
  ScalingParams p_;
  NodeTables3d t_;
  std::vector<double> prox_g_, prox_g0_, buf_, w_;
};

// m -> infinity informative system (conjecture form); the auxiliary
// expectation E[rho''(k2 xi Z1 + k2 sqrt(1-xi^2) Z2)] is state-independent
class SysMinfty4 {
 public:
  SysMinfty4(const ScalingParams& params, const QuadratureGrid& grid)
      : p_(params),
        t_(make_tables_3d(grid, params.kappa1, params.kappa2, params.xi)) {
    prox_g_.assign(t_.size, 0.0);
    buf_.resize(t_.size);
    w_.resize(t_.size);
    std::vector<double> b(t_.size);
    for (long k = 0; k < t_.size; ++k) b[k] = t_.w[k] * t_.rho2_aux[k];
    c_aux_ = pairwise_sum(b.data(), t_.size);
  }

  struct Terms {
    double e1, e2a, e2b, e3;
  };

  Terms eval(const Eigen::Vector4d& s, double gamma) {
    const double k1 = p_.kappa1, k2 = p_.kappa2;
    std::vector<double>& b = buf_;
    for (long k = 0; k < t_.size; ++k) {
      w_[k] = k1 * s[0] * t_.z1[k] + k2 * s[1] * t_.z2[k] + s[2] * t_.z3[k];
      prox_g_[k] = prox_warm(w_[k], gamma, prox_g_[k]);
    }
    Terms T;
    for (long k = 0; k < t_.size; ++k) {
      double d = w_[k] - prox_g_[k];
      b[k] = t_.w[k] * t_.rho1_neg[k] * d * d;
    }
    T.e1 = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * 2.0 * t_.rho1_neg[k] / (1.0 + gamma * rho2(prox_g_[k]));
    T.e2a = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k) b[k] = t_.w[k] * rho2(w_[k]);
    T.e2b = pairwise_sum(b.data(), t_.size);
    for (long k = 0; k < t_.size; ++k)
      b[k] = t_.w[k] * t_.rho2_k[k] * prox_g_[k];
    T.e3 = pairwise_sum(b.data(), t_.size);
    return T;
  }

  Eigen::Vector4d residuals(const Eigen::Vector4d& s) {
    Terms T = eval(s, s[3]);
    const double delta = p_.delta, tau0 = p_.tau0, gamma = s[3];
    const double k_ratio = p_.kappa2 / p_.kappa1;
    const double root = std::sqrt(std::max(0.0, 1.0 - p_.xi * p_.xi));
    return {s[2] * s[2] / (2.0 * delta) - T.e1,
            (1.0 - 1.0 / delta) - T.e2a + tau0 * gamma * T.e2b,
            -s[0] / (2.0 * delta) - T.e3 + 0.5 * tau0 * gamma * k_ratio * p_.xi * c_aux_,
            -s[1] / (2.0 * delta) - 0.5 * tau0 * gamma * root * c_aux_};
  }

  Eigen::Vector4d propose(const Eigen::Vector4d& s) {
    Terms T = eval(s, s[3]);
    const double delta = p_.delta, tau0 = p_.tau0;
    const double k_ratio = p_.kappa2 / p_.kappa1;
    const double root = std::sqrt(std::max(0.0, 1.0 - p_.xi * p_.xi));
    double sigma_new = std::sqrt(std::max(2.0 * delta * T.e1, 1e-14));
    double a1_new =
        -2.0 * delta * (T.e3 - 0.5 * tau0 * s[3] * k_ratio * p_.xi * c_aux_);
    double a2_new = -delta * tau0 * s[3] * root * c_aux_;
    double gamma_new = solve_gamma_root(
        [&](double g) {
          Terms Tg = eval(s, g);
          return (Tg.e2a - g * tau0 * Tg.e2b) - (1.0 - 1.0 / delta);
        },
        s[3]);
    return {a1_new, a2_new, sigma_new, gamma_new};
  }

 private:
  ScalingParams p_;
  NodeTables3d t_;
  std::vector<double> prox_g_, buf_, w_;
  double c_aux_ = 0.0;
};

// damped fixed-point driver shared by all systems. State layout:
// (alpha, sigma, gamma) or (alpha1, alpha2, sigma, gamma); sigma and gamma
// occupy the last two slots.
template <typename System, typename Vec>
Vec fixed_point(System& sys, Vec state, const FixedPointOptions& opts,
                double* residual_out) {
  const int d = static_cast<int>(state.size());
  double omega = opts.omega;
  Vec prev_update = Vec::Zero();
  Eigen::Matrix<int, Vec::RowsAtCompileTime, 1> alt_count;
  alt_count.setZero();
  int consecutive_small = 0;
  std::vector<Vec> tail;

  for (int it = 0; it < opts.max_iter; ++it) {
    Vec proposal = sys.propose(state);
    Vec update = proposal - state;

    for (int c = 0; c < d; ++c) {
      if (it > 0 && update[c] * prev_update[c] < 0.0)
        alt_count[c] += 1;
      else
        alt_count[c] = 0;
      if (alt_count[c] >= 4) {
        omega = std::max(omega / 2.0, 0.05);
        alt_count[c] = 0;
      }
    }
    prev_update = update;

    state += omega * update;
    // sigma and gamma are the last two coordinates
    state[d - 2] = std::clamp(state[d - 2], kSigmaLo, kSigmaHi);
    state[d - 1] = std::clamp(state[d - 1], kGammaLo, kGammaHi);

    tail.push_back(state);
    if (tail.size() > 5) tail.erase(tail.begin());

    if (update.template lpNorm<Eigen::Infinity>() <= opts.update_tol) {
      if (++consecutive_small >= 3) break;
    } else {
      consecutive_small = 0;
    }
  }

  double resid = sys.residuals(state).template lpNorm<Eigen::Infinity>();
  if (residual_out) *residual_out = resid;
  if (consecutive_small < 3 || resid > opts.residual_tol) {
    std::ostringstream msg;
    msg << "fixed_point: no convergence (residual " << resid << "); tail:";
    for (const auto& s : tail) {
      msg << " (";
      for (int c = 0; c < d; ++c) msg << (c ? "," : "") << s[c];
      msg << ")";
    }
    Eigen::VectorXd last = state;
    throw ConvergenceError(msg.str(), last, resid);
  }
  return state;
}

void check_positive(const ScalingParams& p, const char* who) {
  if (!(p.delta > 0.0) || !(p.tau0 > 0.0) || !(p.kappa1 > 0.0))
    throw ArgumentError(std::string(who) + ": delta, tau0, kappa1 must be positive");
  if (p.kappa2 < 0.0 || p.xi < 0.0 || p.xi > 1.0)
    throw ArgumentError(std::string(who) + ": need kappa2 >= 0 and xi in [0,1]");
}

}  // namespace

Eigen::Vector3d residuals_3eq(const Eigen::Vector3d& state,
                              const ScalingParams& params,
                              const QuadratureGrid& grid) {
  check_positive(params, "residuals_3eq");
  if (params.kappa2 != 0.0)
    throw ArgumentError("residuals_3eq: the three-variable system requires kappa2 = 0");
  if (!(state[1] > 0.0) || !(state[2] > 0.0))
    throw ArgumentError("residuals_3eq: sigma and gamma must be positive");
  Sys3 sys(params, grid);
  return sys.residuals(state);
}

Eigen::Vector4d residuals_4eq(const Eigen::Vector4d& state,
                              const ScalingParams& params,
                              const QuadratureGrid& grid) {
  check_positive(params, "residuals_4eq");
  if (!(state[2] > 0.0) || !(state[3] > 0.0))
    throw ArgumentError("residuals_4eq: sigma and gamma must be positive");
  Sys4 sys(params, grid);
  return sys.residuals(state);
}

Eigen::Vector3d residuals_minfty(const Eigen::Vector3d& state,
                                 const ScalingParams& params,
                                 const QuadratureGrid& grid) {
  check_positive(params, "residuals_minfty");
  SysMinfty3 sys(params, grid);
  return sys.residuals(state);
}

namespace {

template <typename System>
ScalarSolution run_3var(System& sys, const FixedPointOptions& opts,
                        SystemKind kind, bool check_uniqueness) {
  double resid = 0.0;
  Eigen::Vector3d sol =
      fixed_point(sys, Eigen::Vector3d(1.0, 1.0, 1.0), opts, &resid);
  if (check_uniqueness) {
    for (Eigen::Vector3d start : {Eigen::Vector3d(0.5, 2.0, 0.5),
                                  Eigen::Vector3d(1.5, 0.5, 2.0)}) {
      double r2 = 0.0;
      Eigen::Vector3d other = fixed_point(sys, start, opts, &r2);
      if ((other - sol).lpNorm<Eigen::Infinity>() > 1e-4)
        throw NonUniquenessError(
            "fixed-point restarts disagree by more than 1e-4; the system may "
            "not have a unique solution at these parameters");
    }
  }
  ScalarSolution out;
  out.alpha1 = sol[0];
  out.alpha2 = 0.0;
  out.sigma = sol[1];
  out.gamma = sol[2];
  out.residual_norm = resid;
  out.system = kind;
  return out;
}

template <typename System>
ScalarSolution run_4var(System& sys, const FixedPointOptions& opts,
                        SystemKind kind, bool check_uniqueness) {
  double resid = 0.0;
  Eigen::Vector4d sol =
      fixed_point(sys, Eigen::Vector4d(1.0, 0.0, 1.0, 1.0), opts, &resid);
  if (check_uniqueness) {
    for (Eigen::Vector4d start : {Eigen::Vector4d(0.5, 0.2, 2.0, 0.5),
                                  Eigen::Vector4d(1.5, -0.2, 0.5, 2.0)}) {
      double r2 = 0.0;
      Eigen::Vector4d other = fixed_point(sys, start, opts, &r2);
      if ((other - sol).lpNorm<Eigen::Infinity>() > 1e-4)
        throw NonUniquenessError(
            "fixed-point restarts disagree by more than 1e-4; the system may "
            "not have a unique solution at these parameters");
    }
  }
  ScalarSolution out;
  out.alpha1 = sol[0];
  out.alpha2 = sol[1];
  out.sigma = sol[2];
  out.gamma = sol[3];
  out.residual_norm = resid;
  out.system = kind;
  return out;
}

}  // namespace

ScalarSolution solve_3eq(const ScalingParams& params,
                         const FixedPointOptions& opts) {
  check_positive(params, "solve_3eq");
  if (params.kappa2 != 0.0)
    throw ArgumentError("solve_3eq: the three-variable system requires kappa2 = 0");
  if (std::isinf(params.m))
    throw ArgumentError("solve_3eq: m must be finite (use solve_minfty)");
  if (!(params.m * params.delta > 2.0))
    throw ArgumentError(
        "solve_3eq: requires m*delta > 2 (synthetic data of size M > 2p, the "
        "Theorem 5 existence condition)");
  QuadratureGrid grid = gauss_hermite(opts.quad_nodes, 2);
  Sys3 sys(params, grid);
  return run_3var(sys, opts, SystemKind::three_eq, opts.check_uniqueness);
}

ScalarSolution solve_4eq(const ScalingParams& params,
                         const FixedPointOptions& opts) {
  check_positive(params, "solve_4eq");
  if (std::isinf(params.m))
    throw ArgumentError("solve_4eq: m must be finite (use solve_minfty)");
  QuadratureGrid grid = gauss_hermite(opts.quad_nodes, 3);
  Sys4 sys(params, grid);
  return run_4var(sys, opts, SystemKind::four_eq, opts.check_uniqueness);
}

ScalarSolution solve_minfty(const ScalingParams& params,
                            const FixedPointOptions& opts) {
  check_positive(params, "solve_minfty");
  if (!std::isinf(params.m))
    throw ArgumentError("solve_minfty: params.m must be +infinity");
  if (params.kappa2 == 0.0) {
    QuadratureGrid grid = gauss_hermite(opts.quad_nodes, 2);
    SysMinfty3 sys(params, grid);
    return run_3var(sys, opts, SystemKind::m_infinity, opts.check_uniqueness);
  }
  QuadratureGrid grid = gauss_hermite(opts.quad_nodes, 3);
  SysMinfty4 sys(params, grid);
  return run_4var(sys, opts, SystemKind::m_infinity, opts.check_uniqueness);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ArgumentError("norm_quantile: p must be in (0,1)");
  // Newton on the CDF from a logistic-ish start; converges in a few steps
  double x = 0.0;
  for (int it = 0; it < 100; ++it) {
    double f = norm_cdf(x) - p;
    double d = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (d < 1e-300) break;
    double step = f / d;
    x -= step;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

LimitMetrics limit_metrics(const ScalarSolution& sol,
                           const ScalingParams& params) {
  const double k1 = params.kappa1, k2 = params.kappa2;
  const double a1 = sol.alpha1, a2 = sol.alpha2, s = sol.sigma;
  LimitMetrics out;
  out.mse = (a1 - 1.0) * (a1 - 1.0) * k1 * k1 + a2 * a2 * k2 * k2 + s * s;
  double norm_limit_sq = a1 * a1 * k1 * k1 + a2 * a2 * k2 * k2 + s * s;
  out.cosine = a1 * k1 / std::sqrt(norm_limit_sq);
  if (s <= 0.0)
    throw NumericError("limit_metrics: sigma = 0 makes the generalization error degenerate");
  QuadratureGrid grid = gauss_hermite(64, 1);
  // slope of the decision boundary in the (signal, estimator) Gaussian pair
  double a = a1 * k1 / std::sqrt(a2 * a2 * k2 * k2 + s * s);
  out.gen_error = expect(grid, [&](double z) {
    return rho1(k1 * z) * norm_cdf(-a * z) +
           (1.0 - rho1(k1 * z)) * norm_cdf(a * z);
  });
  double r = std::sqrt(norm_limit_sq);
  out.pred_deviance =
      expect(grid, [&](double z) { return rho(r * z); }) -
      a1 * k1 * expect(grid, [&](double z) { return rho1(k1 * z) * z; });
  return out;
}

}  // namespace catmap
