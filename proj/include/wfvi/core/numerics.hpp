#ifndef WFVI_CORE_NUMERICS_HPP
#define WFVI_CORE_NUMERICS_HPP

#include <cmath>
#include <numbers>

namespace wfvi {

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// 1 / (1 + e^{-x}) without overflow.
inline double sigmoid(double x) {
  if (x >= 0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_normal_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

namespace detail {
// Asymptotic series 1 - 1/u² + 3/u⁴ - ... of Φ(u) (-u) / φ(u) for u << 0.
inline double mills_series(double u) {
  const double v = 1.0 / (u * u);
  return 1.0 - v * (1.0 - 3.0 * v * (1.0 - 5.0 * v * (1.0 - 7.0 * v
                                                      * (1.0 - 9.0 * v))));
}
inline constexpr double kTailSwitch = -35.0;
}  // namespace detail

/// log Φ(u), accurate deep in the lower tail.
inline double log_normal_cdf(double u) {
  if (u > detail::kTailSwitch)
    return std::log(0.5 * std::erfc(-u / std::numbers::sqrt2));
  return log_normal_pdf(u) - std::log(-u) + std::log(detail::mills_series(u));
}

/// φ(u) / Φ(u), accurate deep in the lower tail.
inline double inverse_mills(double u) {
  if (u > detail::kTailSwitch)
    return std::exp(log_normal_pdf(u) - log_normal_cdf(u));
  return -u / detail::mills_series(u);
}

/// d/du φ(u)/Φ(u) = -R(u)(u + R(u)).
inline double inverse_mills_derivative(double u) {
  const double r = inverse_mills(u);
  return -r * (u + r);
}

}  // namespace wfvi

#endif
