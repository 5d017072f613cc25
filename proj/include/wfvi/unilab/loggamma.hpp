#ifndef WFVI_UNILAB_LOGGAMMA_HPP
#define WFVI_UNILAB_LOGGAMMA_HPP

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wfvi {

/**
 * Principal branch W₀ of the Lambert W function: the w ≥ −1 with
 * w eʷ = x. Starts from Boost's W₀ and polishes with Halley steps until
 * |w eʷ − x| ≤ 1e-13 max(1, |x|).
 *
 * @throw std::domain_error if x < −1/e
 */
inline double lambert_w0(double x) {
  const double branch = -std::exp(-1.0);
  if (x < branch) {
    // Accept round-off just below the branch point.
    if (x < branch * (1.0 + 1e-15))
      throw std::domain_error("lambert_w0: argument below -1/e");
    return -1.0;
  }
  if (x == 0.0)
    return 0.0;
  double w = boost::math::lambert_w0(std::max(x, branch));
  const double tol = 1e-13 * std::max(1.0, std::abs(x));
  for (int it = 0; it < 20; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= tol)
      break;
    const double wp1 = w + 1.0;
    if (std::abs(wp1) < 1e-12)
      break;  // at the branch point, where the derivative vanishes
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w = std::max(w - step, -1.0);
  }
  return w;
}

/// Optimal Gaussian parameters for the log-inverse-gamma target together
/// with its true mean, mode and variance.
struct LogGammaClosedForms {
  double mu_kl = 0, var_kl = 0;
  double mu_fd = 0, var_fd = 0;
  double mu_sd = 0, var_sd = 0;
  double mu_star = 0, mode_star = 0, var_star = 0;

  /// σ²_S < σ²_F < σ²_KL < σ*² and m* < μ_S < μ_F < μ_KL < μ*.
  bool ordering_holds() const {
    return var_sd < var_fd && var_fd < var_kl && var_kl < var_star
           && mode_star < mu_sd && mu_sd < mu_fd && mu_fd < mu_kl
           && mu_kl < mu_star;
  }
};

/// @throw std::invalid_argument unless a1 > 1/2 and b1 > 0
inline LogGammaClosedForms loggamma_closed_forms(double a1, double b1) {
  if (!(a1 > 0.5) || !(b1 > 0))
    throw std::invalid_argument("loggamma_closed_forms: need a1 > 1/2, b1 > 0");
  LogGammaClosedForms c;
  c.var_kl = 1.0 / a1;
  c.mu_kl = std::log(b1 / a1) + 0.5 / a1;
  c.var_fd = -2.0 * lambert_w0(-1.0 / (2.0 * (a1 + 1.0)));
  c.mu_fd = std::log(b1 / (a1 + 1.0)) + 1.5 * c.var_fd;
  c.var_sd = 1.0 - lambert_w0(std::numbers::e * a1 * a1
                              / ((a1 + 1.0) * (a1 + 1.0)));
  c.mu_sd = std::log(b1 / (a1 + 1.0)) + 1.5 * c.var_sd;
  c.mode_star = std::log(b1 / a1);
  c.mu_star = std::log(b1) - boost::math::digamma(a1);
  c.var_star = boost::math::trigamma(a1);
  return c;
}

}  // namespace wfvi

#endif
