#ifndef WFVI_ANALYTICS_BATCH_LIMITS_HPP
#define WFVI_ANALYTICS_BATCH_LIMITS_HPP

#include <wfvi/optim/batch_stats.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

namespace wfvi {

struct MeanFieldPoint {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma_diag;
};

/**
 * Mean-field minimizers of the batch objectives for fixed statistics:
 * SD at Σ_ii = sqrt(C_θ,ii / C_g,ii); FD at Σ_ii = −C_θ,ii / C_θg,ii when
 * every diagonal C_θg,ii is negative (otherwise FD has no minimizer and
 * the variance explodes). In both cases μ_i = θ̄_i + ḡ_i Σ_ii.
 */
struct BatchMeanFieldMinimizers {
  MeanFieldPoint sd;
  std::optional<MeanFieldPoint> fd;
};

inline BatchMeanFieldMinimizers batch_meanfield_minimizers(const BatchStats& s) {
  BatchMeanFieldMinimizers out;
  out.sd.sigma_diag = (s.C_theta.diagonal().array()
                       / s.C_g.diagonal().array())
                          .sqrt()
                          .matrix();
  out.sd.mu = s.theta_bar + s.g_bar.cwiseProduct(out.sd.sigma_diag);
  const Eigen::VectorXd ctg = s.C_thetag.diagonal();
  if ((ctg.array() < 0).all()) {
    MeanFieldPoint fd;
    fd.sigma_diag = (-s.C_theta.diagonal().array() / ctg.array()).matrix();
    fd.mu = s.theta_bar + s.g_bar.cwiseProduct(fd.sigma_diag);
    out.fd = fd;
  }
  return out;
}

/// Infinite-batch limits of the batch mean-field minimizers.
struct BatchLimits {
  MeanFieldPoint sd;
  MeanFieldPoint fd;
  /// Σ^Ŝ_ii ≤ Σ^F̂_ii = 1 / Λ_ii for all i.
  bool ordering_holds = true;
};

/**
 * @param Lambda target precision
 * @param nu target mean
 * @param mu_hat mean of the sampling distribution
 * @param sigma_hat_diag diagonal covariance of the sampling distribution
 */
inline BatchLimits batch_limits(const Eigen::MatrixXd& Lambda,
                                const Eigen::VectorXd& nu,
                                const Eigen::VectorXd& mu_hat,
                                const Eigen::VectorXd& sigma_hat_diag) {
  const Eigen::Index d = Lambda.rows();
  if (nu.size() != d || mu_hat.size() != d || sigma_hat_diag.size() != d)
    throw std::invalid_argument("batch_limits: dimension mismatch");
  BatchLimits out;
  const Eigen::VectorXd shift = Lambda * (nu - mu_hat);
  const Eigen::VectorXd denom = Lambda.cwiseAbs2() * sigma_hat_diag;
  out.sd.sigma_diag = (sigma_hat_diag.array() / denom.array()).sqrt().matrix();
  out.sd.mu = mu_hat + out.sd.sigma_diag.cwiseProduct(shift);
  out.fd.sigma_diag = Lambda.diagonal().cwiseInverse();
  out.fd.mu = mu_hat + out.fd.sigma_diag.cwiseProduct(shift);
  for (Eigen::Index i = 0; i < d; ++i)
    if (out.sd.sigma_diag(i) > out.fd.sigma_diag(i) * (1.0 + 1e-12))
      out.ordering_holds = false;
  return out;
}

/// Limits of the batch statistics for samples from N(μ̂, Σ̂) and target
/// N(ν, Λ⁻¹).
inline BatchStats batch_stats_limits(const Eigen::MatrixXd& Lambda,
                                     const Eigen::VectorXd& nu,
                                     const Eigen::VectorXd& mu_hat,
                                     const Eigen::MatrixXd& Sigma_hat) {
  BatchStats s;
  s.theta_bar = mu_hat;
  s.C_theta = Sigma_hat;
  s.g_bar = Lambda * (nu - mu_hat);
  s.C_g = Lambda * Sigma_hat * Lambda;
  s.C_thetag = -Sigma_hat * Lambda;
  s.B = 0;
  return s;
}

struct BatchStatsDeviation {
  BatchStats sampled;
  BatchStats limit;
  double theta_bar = 0, C_theta = 0, g_bar = 0, C_g = 0, C_thetag = 0;
  /// Largest deviation relative to the scale of the corresponding limit.
  double max_relative() const {
    return std::max({theta_bar, C_theta, g_bar, C_g, C_thetag});
  }
};

/**
 * Draws B samples from N(μ̂, Σ̂), evaluates the Gaussian score at each and
 * reports max-abs deviations of the batch statistics from their limits,
 * each scaled by max(1, max-abs of the limit).
 */
inline BatchStatsDeviation batch_stats_limit_check(const Eigen::MatrixXd& Lambda,
                                                   const Eigen::VectorXd& nu,
                                                   const Eigen::VectorXd& mu_hat,
                                                   const Eigen::MatrixXd& Sigma_hat,
                                                   long long B, std::uint64_t seed) {
  const int d = static_cast<int>(Lambda.rows());
  if (B < 1)
    throw std::invalid_argument("batch_stats_limit_check: B must be >= 1");
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma_hat);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("batch_stats_limit_check: Sigma_hat not SPD");
  const Eigen::MatrixXd L = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  BatchStatsAccumulator acc(d);
  const long long chunk = 4096;
  for (long long done = 0; done < B; done += chunk) {
    const long long m = std::min(chunk, B - done);
    Eigen::MatrixXd Z(d, m);
    for (long long j = 0; j < m; ++j)
      for (int i = 0; i < d; ++i)
        Z(i, j) = n01(rng);
    const Eigen::MatrixXd X = (L * Z).colwise() + mu_hat;
    const Eigen::MatrixXd G = -(Lambda * (X.colwise() - nu));
    acc.add(X, G);
  }
  BatchStatsDeviation dev;
  dev.sampled = acc.finish();
  dev.limit = batch_stats_limits(Lambda, nu, mu_hat, Sigma_hat);
  auto rel = [](const auto& a, const auto& b) {
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
  };
  dev.theta_bar = rel(dev.sampled.theta_bar, dev.limit.theta_bar);
  dev.C_theta = rel(dev.sampled.C_theta, dev.limit.C_theta);
  dev.g_bar = rel(dev.sampled.g_bar, dev.limit.g_bar);
  dev.C_g = rel(dev.sampled.C_g, dev.limit.C_g);
  dev.C_thetag = rel(dev.sampled.C_thetag, dev.limit.C_thetag);
  return dev;
}

}  // namespace wfvi

#endif
