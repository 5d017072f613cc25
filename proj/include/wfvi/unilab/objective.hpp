#ifndef WFVI_UNILAB_OBJECTIVE_HPP
#define WFVI_UNILAB_OBJECTIVE_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/unilab/quadrature.hpp>
#include <wfvi/unilab/uni_target.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wfvi {

enum class UniDivergence { KLD, FD, SD };

inline const char* to_string(UniDivergence d) {
  switch (d) {
    case UniDivergence::KLD:
      return "KLD";
    case UniDivergence::FD:
      return "FD";
    case UniDivergence::SD:
      return "SD";
  }
  return "?";
}

/// Objective value and gradient with respect to (μ, log σ²).
struct UniObjectiveValue {
  double value = 0;
  double d_mu = 0;
  double d_log_var = 0;
};

inline constexpr int kDefaultHermiteNodes = 200;

/**
 * Objective for q = N(μ, σ²) against a univariate target, with expectations
 * by Gauss–Hermite quadrature in θ = μ + σx:
 * - KLD: KL(q‖p) = −E log p(θ) − ½ log(2πeσ²) (negative ELBO for a
 *   normalized target),
 * - FD: E (s(θ) + x/σ)²,
 * - SD: σ² FD.
 *
 * @throw NonFiniteError naming the first quadrature node that produced a
 * non-finite term
 */
inline UniObjectiveValue uni_objective_with_gradient(
    const UniTarget& target, UniDivergence div, double mu, double sigma_sq,
    int n_nodes = kDefaultHermiteNodes) {
  if (!(sigma_sq > 0))
    throw std::invalid_argument("uni_objective: sigma_sq must be positive");
  const GaussHermiteRule& gh = gauss_hermite(n_nodes);
  const double sigma = std::sqrt(sigma_sq);
  UniObjectiveValue out;
  double f = 0, dmu = 0, dsig = 0;
  for (int k = 0; k < n_nodes; ++k) {
    const double x = gh.nodes(k);
    const double w = gh.weights(k);
    const double theta = mu + sigma * x;
    const double s = target.score(theta);
    if (div == UniDivergence::KLD) {
      const double lp = target.log_p(theta);
      if (!std::isfinite(lp) || !std::isfinite(s))
        throw NonFiniteError("quadrature node " + std::to_string(k));
      f -= w * lp;
      dmu -= w * s;
      dsig -= w * s * x;
    } else {
      const double ds = target.score_derivative(theta);
      if (!std::isfinite(s) || !std::isfinite(ds))
        throw NonFiniteError("quadrature node " + std::to_string(k));
      const double r = s + x / sigma;
      f += w * r * r;
      dmu += 2.0 * w * r * ds;
      dsig += 2.0 * w * r * (ds * x - x / sigma_sq);
    }
  }
  if (div == UniDivergence::KLD) {
    f -= 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma_sq);
    dsig -= 1.0 / sigma;
  }
  // dσ/d log σ² = σ / 2
  double dlv = 0.5 * sigma * dsig;
  if (div == UniDivergence::SD) {
    dmu *= sigma_sq;
    dlv = sigma_sq * f + sigma_sq * dlv;
    f *= sigma_sq;
  }
  out.value = check_finite(f, "uni_objective value");
  out.d_mu = check_finite(dmu, "uni_objective gradient");
  out.d_log_var = check_finite(dlv, "uni_objective gradient");
  return out;
}

inline double uni_objective(const UniTarget& target, UniDivergence div,
                            double mu, double sigma_sq,
                            int n_nodes = kDefaultHermiteNodes) {
  return uni_objective_with_gradient(target, div, mu, sigma_sq, n_nodes).value;
}

/// Closed-form FD for the log-inverse-gamma target.
inline double loggamma_fd_closed_form(double a1, double b1, double mu,
                                      double sigma_sq) {
  return a1 * a1 + b1 * b1 * std::exp(2.0 * sigma_sq - 2.0 * mu)
         - 2.0 * b1 * (a1 + 1.0) * std::exp(0.5 * sigma_sq - mu)
         + 1.0 / sigma_sq;
}

}  // namespace wfvi

#endif
