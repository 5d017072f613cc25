#ifndef WFVI_TARGETS_SYNTHETIC_HPP
#define WFVI_TARGETS_SYNTHETIC_HPP

#include <wfvi/core/sparsity_pattern.hpp>
#include <wfvi/targets/gaussian.hpp>
#include <wfvi/targets/logistic.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace wfvi {

/**
 * Gaussian target whose precision Λ = TTᵀ has a lower-triangular factor T
 * with `band` subdiagonals: diagonal U(1, 1.5), band entries U(−0.3, 0.3).
 * The mean is N(0, I). The sparsity hint is the matching banded pattern.
 */
inline GaussianTarget banded_gaussian_target(int d, int band, std::uint64_t seed) {
  if (d < 1 || band < 0 || band >= d)
    throw std::invalid_argument("banded_gaussian_target: need 0 <= band < d");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> diag(1.0, 1.5), off(-0.3, 0.3);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    T(i, i) = diag(rng);
    for (int j = std::max(0, i - band); j < i; ++j)
      T(i, j) = off(rng);
  }
  Eigen::VectorXd nu(d);
  for (int i = 0; i < d; ++i)
    nu(i) = n01(rng);
  Eigen::MatrixXd lambda = T * T.transpose();
  lambda = 0.5 * (lambda + lambda.transpose());
  return GaussianTarget(nu, lambda,
                        SparsityPattern::block_banded(d, std::vector<int>(d, 1),
                                                      0, band));
}

struct SimulatedLogistic {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd theta;
};

/**
 * Logistic data with an intercept column and d − 1 standard normal
 * covariates; coefficients θ ~ N(0, coef_sd² I), y_i ~ Bernoulli(σ(X_iᵀθ)).
 */
inline SimulatedLogistic simulate_logistic(int n, int d, std::uint64_t seed,
                                           double coef_sd = 0.5) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("simulate_logistic: need n, d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;
  SimulatedLogistic s;
  s.theta.resize(d);
  for (int j = 0; j < d; ++j)
    s.theta(j) = coef_sd * n01(rng);
  s.X.resize(n, d);
  s.y.resize(n);
  for (int i = 0; i < n; ++i) {
    s.X(i, 0) = 1.0;
    for (int j = 1; j < d; ++j)
      s.X(i, j) = n01(rng);
    const double p = 1.0 / (1.0 + std::exp(-s.X.row(i).dot(s.theta)));
    s.y(i) = u01(rng) < p ? 1.0 : 0.0;
  }
  return s;
}

}  // namespace wfvi

#endif
