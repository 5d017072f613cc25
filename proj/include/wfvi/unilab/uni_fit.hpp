#ifndef WFVI_UNILAB_UNI_FIT_HPP
#define WFVI_UNILAB_UNI_FIT_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/unilab/objective.hpp>
#include <wfvi/unilab/uni_target.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace wfvi {

struct UniFitOptions {
  double grad_tol = 1e-8;
  int max_iter = 5000;
  double sigma_sq_floor = 1e-12;
  /// Upper bound on log(σ²/σ*²). Fits ending on it are rejected: some
  /// divergences decrease all the way to σ² → ∞ on heavy-tailed targets.
  double log_var_ratio_cap = 8.0;
  /// Start grid: log(σ²/σ*²) over [log_var_lo, log_var_hi] times μ offsets.
  int n_log_var_starts = 8;
  double log_var_lo = -6.0;
  double log_var_hi = 2.0;
  std::vector<double> mu_offsets_in_sd{-2.0, 0.0, 2.0};
  /// Node count switches from 200 to 400 when the two disagree by more.
  double node_agreement_tol = 1e-7;
};

struct UniFit {
  double mu = 0;
  double sigma_sq = 0;
  UniDivergence divergence = UniDivergence::KLD;
  double objective = 0;
  double grad_norm = 0;
  int n_nodes = kDefaultHermiteNodes;
  bool collapsed = false;
  int iterations = 0;
  /// |μ − μ*| / σ*
  double mean_error = 0;
  /// |μ − m*| / σ*
  double mode_error = 0;
  /// σ² / σ*²
  double variance_ratio = 0;
  /// 1 − IAE / 2, in [0, 1]
  double accuracy = 0;
};

/**
 * Accuracy 1 − ½∫|q − p| of q = N(μ, σ²), integrating adaptively over
 * ±12 combined standard deviations and adding the tail mass left outside.
 */
inline double accuracy(double mu, double sigma_sq, const UniTarget& target) {
  const double sq = std::sqrt(sigma_sq);
  const double sp = target.sd();
  const double mp = target.mean();
  const double spread = 12.0 * std::max(sq, sp);
  const double lo = std::min(mu, mp) - spread;
  const double hi = std::max(mu, mp) + spread;
  auto log_ratio = [&](double th) {
    const double z = (th - mu) / sq;
    return log_normal_pdf(z) - std::log(sq) - target.log_p(th);
  };
  auto diff = [&](double th) {
    const double z = (th - mu) / sq;
    return std::exp(log_normal_pdf(z)) / sq - std::exp(target.log_p(th));
  };
  // Split at the crossings of q and p so each piece is smooth.
  std::vector<double> cuts{lo};
  const int n_scan = 4000;
  double prev_x = lo, prev_v = log_ratio(lo);
  for (int k = 1; k <= n_scan; ++k) {
    const double x = lo + (hi - lo) * k / n_scan;
    const double v = log_ratio(x);
    if (std::isfinite(prev_v) && std::isfinite(v) && (prev_v < 0) != (v < 0)) {
      std::uintmax_t iters = 100;
      auto tol = boost::math::tools::eps_tolerance<double>(50);
      const auto r = boost::math::tools::toms748_solve(log_ratio, prev_x, x,
                                                       prev_v, v, tol, iters);
      cuts.push_back(0.5 * (r.first + r.second));
    }
    prev_x = x;
    prev_v = v;
  }
  cuts.push_back(hi);
  double iae = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i])
      continue;
    iae += std::abs(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        diff, cuts[i], cuts[i + 1], 15, 1e-12));
  }
  const double q_lo = 0.5 * std::erfc((mu - lo) / (sq * std::numbers::sqrt2));
  const double q_hi = 0.5 * std::erfc((hi - mu) / (sq * std::numbers::sqrt2));
  iae += std::abs(target.cdf(lo) - q_lo)
         + std::abs((1.0 - target.cdf(hi)) - q_hi);
  return std::clamp(1.0 - 0.5 * iae, 0.0, 1.0);
}

namespace detail {

struct MinimizeResult {
  Eigen::Vector2d x;
  double f = 0;
  Eigen::Vector2d g;
  double grad_norm = 0;
  bool converged = false;
  bool at_floor = false;
  bool at_cap = false;
  int iterations = 0;
};

using Objective2 = std::function<double(const Eigen::Vector2d&, Eigen::Vector2d&)>;

// BFGS over (μ, log σ²) with a lower bound on log σ². The line search is
// Armijo backtracking; near the optimum, where round-off hides the decrease,
// a step that keeps f within round-off and reduces the gradient is accepted.
inline MinimizeResult bfgs_minimize(const Objective2& fun, Eigen::Vector2d x,
                                    double lv_min, double lv_max,
                                    double grad_tol, int max_iter) {
  MinimizeResult r;
  x(1) = std::clamp(x(1), lv_min, lv_max);
  Eigen::Vector2d g;
  double f = fun(x, g);
  Eigen::Matrix2d H = Eigen::Matrix2d::Identity();
  bool scaled = false;
  auto projected = [&](const Eigen::Vector2d& xv, const Eigen::Vector2d& gv) {
    Eigen::Vector2d pg = gv;
    if ((xv(1) <= lv_min && gv(1) > 0) || (xv(1) >= lv_max && gv(1) < 0))
      pg(1) = 0;
    return pg;
  };
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::Vector2d pg = projected(x, g);
    if (pg.norm() < grad_tol) {
      r.converged = true;
      break;
    }
    if (x(1) >= lv_max && g(1) < 0)
      break;  // running away to σ² → ∞; the caller rejects this start
    if (x(1) <= lv_min && g(1) > 0) {
      H(0, 1) = H(1, 0) = 0;
    }
    Eigen::Vector2d p = -H * pg;
    if ((x(1) <= lv_min && p(1) < 0) || (x(1) >= lv_max && p(1) > 0))
      p(1) = 0;
    if (pg.dot(p) >= 0) {
      H.setIdentity();
      p = -pg;
    }
    const double pmax = p.cwiseAbs().maxCoeff();
    if (pmax > 2.0)
      p *= 2.0 / pmax;
    const double slope = g.dot(p);
    double alpha = 1.0;
    bool accepted = false;
    Eigen::Vector2d xn, gn;
    double fn = 0;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      xn = x + alpha * p;
      xn(1) = std::clamp(xn(1), lv_min, lv_max);
      try {
        fn = fun(xn, gn);
      } catch (const NonFiniteError&) {
        continue;
      }
      const double roundoff = 1e-13 * std::max(1.0, std::abs(f));
      if (fn <= f + 1e-4 * alpha * slope
          || (fn <= f + roundoff
              && projected(xn, gn).norm() < pg.norm())) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      break;
    const Eigen::Vector2d s = xn - x;
    const Eigen::Vector2d y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-18 * s.norm() * y.norm() && sy > 0) {
      if (!scaled) {
        H = Eigen::Matrix2d::Identity() * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose())
          + rho * s * s.transpose();
    }
    x = xn;
    g = gn;
    f = fn;
  }
  r.x = x;
  r.f = f;
  r.g = g;
  r.grad_norm = projected(x, g).norm();
  r.converged = r.converged || r.grad_norm < grad_tol;
  r.at_floor = x(1) <= lv_min;
  r.at_cap = x(1) >= lv_max;
  r.iterations = it;
  return r;
}

inline int choose_nodes(const UniTarget& target, UniDivergence div, double mu,
                        double sigma_sq, double tol) {
  try {
    const double a = uni_objective(target, div, mu, sigma_sq, 200);
    const double b = uni_objective(target, div, mu, sigma_sq, 400);
    return std::abs(a - b) > tol ? 400 : 200;
  } catch (const NonFiniteError&) {
    return 400;
  }
}

}  // namespace detail

/// Fills the accuracy and moment metrics of a fit.
inline void fill_metrics(UniFit& fit, const UniTarget& target) {
  const double sd = target.sd();
  fit.mean_error = std::abs(fit.mu - target.mean()) / sd;
  fit.mode_error = std::abs(fit.mu - target.mode()) / sd;
  fit.variance_ratio = fit.sigma_sq / target.variance();
  fit.accuracy = accuracy(fit.mu, fit.sigma_sq, target);
}

/**
 * Multi-start minimization of the chosen divergence over (μ, log σ²);
 * returns the converged local minimum with the lowest objective.
 *
 * @throw ConvergenceError if no start converges
 */
inline UniFit uni_fit(const UniTarget& target, UniDivergence div,
                      const UniFitOptions& opt = {}) {
  const double m0 = target.mean();
  const double v0 = target.variance();
  const double sd0 = std::sqrt(v0);
  const double lv_min = std::log(opt.sigma_sq_floor);
  const double lv_max = std::log(v0) + opt.log_var_ratio_cap;
  bool found = false;
  UniFit best;
  for (double off : opt.mu_offsets_in_sd)
    for (int k = 0; k < opt.n_log_var_starts; ++k) {
      const double frac = opt.n_log_var_starts > 1
                              ? double(k) / (opt.n_log_var_starts - 1)
                              : 0.5;
      const double lv
          = std::log(v0) + opt.log_var_lo + frac * (opt.log_var_hi - opt.log_var_lo);
      Eigen::Vector2d x0(m0 + off * sd0, lv);
      int nodes = detail::choose_nodes(target, div, x0(0), std::exp(x0(1)),
                                       opt.node_agreement_tol);
      detail::MinimizeResult res;
      for (int pass = 0; pass < 2; ++pass) {
        auto fun = [&](const Eigen::Vector2d& x, Eigen::Vector2d& g) {
          const auto v = uni_objective_with_gradient(target, div, x(0),
                                                     std::exp(x(1)), nodes);
          g << v.d_mu, v.d_log_var;
          return v.value;
        };
        try {
          res = detail::bfgs_minimize(fun, x0, lv_min, lv_max, opt.grad_tol,
                                      opt.max_iter);
        } catch (const NonFiniteError&) {
          res.converged = false;
          break;
        }
        if (nodes == 400 || !res.converged)
          break;
        const int at_opt = detail::choose_nodes(
            target, div, res.x(0), std::exp(res.x(1)), opt.node_agreement_tol);
        if (at_opt == nodes)
          break;
        nodes = at_opt;
        x0 = res.x;
      }
      if (!res.converged || res.at_cap)
        continue;
      if (!found || res.f < best.objective) {
        found = true;
        best.mu = res.x(0);
        best.sigma_sq = std::exp(res.x(1));
        best.objective = res.f;
        best.grad_norm = res.grad_norm;
        best.collapsed = res.at_floor;
        best.n_nodes = nodes;
        best.iterations = res.iterations;
      }
    }
  if (!found)
    throw ConvergenceError("uni_fit: no start converged for "
                           + target.label() + " / " + to_string(div));
  best.divergence = div;
  fill_metrics(best, target);
  return best;
}

}  // namespace wfvi

#endif
