#ifndef WFVI_UNILAB_QUADRATURE_HPP
#define WFVI_UNILAB_QUADRATURE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace wfvi {

/// Nodes and weights for E f(x), x ~ N(0, 1); weights sum to one.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

namespace detail {

// Orthonormal probabilists' Hermite recurrence evaluated at x. Returns
// p_n(x) / p_{n-1}(x) and log Σ_{j<n} p_j(x)², rescaling to avoid overflow.
inline void hermite_orthonormal(int n, double x, double* ratio,
                                double* log_sum_sq) {
  double prev = 0.0, cur = 1.0, sum = 1.0, log_scale = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double next
        = (x * cur - std::sqrt(static_cast<double>(j)) * prev)
          / std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
    sum += cur * cur;
    if (std::abs(cur) > 1e100) {
      prev *= 1e-100;
      cur *= 1e-100;
      sum *= 1e-200;
      log_scale += 200.0 * std::log(10.0);
    }
  }
  const double pn
      = (x * cur - std::sqrt(static_cast<double>(n - 1)) * prev)
        / std::sqrt(static_cast<double>(n));
  *ratio = pn / cur;
  *log_sum_sq = std::log(sum) + log_scale;
}

}  // namespace detail

/**
 * n-point Gauss–Hermite rule for the standard normal. Nodes start from the
 * eigenvalues of the Jacobi matrix and are polished by Newton steps; weights
 * come from the Christoffel function so tail weights keep full relative
 * precision.
 */
inline GaussHermiteRule compute_gauss_hermite(int n) {
  if (n < 1)
    throw std::invalid_argument("gauss_hermite: n must be >= 1");
  GaussHermiteRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  if (n == 1) {
    r.nodes(0) = 0;
    r.weights(0) = 1;
    return r;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 0; k < n - 1; ++k)
    sub(k) = std::sqrt(static_cast<double>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  for (int k = 0; k < n; ++k) {
    double x = es.eigenvalues()(k);
    double ratio = 0, lss = 0;
    for (int it = 0; it < 5; ++it) {
      detail::hermite_orthonormal(n, x, &ratio, &lss);
      // p_n' = sqrt(n) p_{n-1}
      x -= ratio / std::sqrt(static_cast<double>(n));
    }
    detail::hermite_orthonormal(n, x, &ratio, &lss);
    r.nodes(k) = x;
    r.weights(k) = std::exp(-lss);
  }
  // Symmetrize to remove round-off asymmetry.
  for (int k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (r.nodes(n - 1 - k) - r.nodes(k));
    const double w = 0.5 * (r.weights(n - 1 - k) + r.weights(k));
    r.nodes(k) = -x;
    r.nodes(n - 1 - k) = x;
    r.weights(k) = w;
    r.weights(n - 1 - k) = w;
  }
  if (n % 2 == 1)
    r.nodes(n / 2) = 0.0;
  r.weights /= r.weights.sum();
  return r;
}

/// Cached rule; thread-safe.
inline const GaussHermiteRule& gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot)
    slot = std::make_unique<GaussHermiteRule>(compute_gauss_hermite(n));
  return *slot;
}

}  // namespace wfvi

#endif
