#ifndef WFVI_OPTIM_NATURAL_HPP
#define WFVI_OPTIM_NATURAL_HPP

#include <wfvi/analytics/batch_limits.hpp>
#include <wfvi/analytics/recursion.hpp>
#include <wfvi/optim/batch_stats.hpp>
#include <wfvi/targets/gaussian.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <stdexcept>

namespace wfvi {

struct GaussianParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
};

/**
 * Natural-gradient step on the batch score-based divergence:
 *   Σ'⁻¹ = Σ⁻¹ + 2ρ(V − Σ⁻¹UΣ⁻¹),
 *   μ'   = μ − ρΣ'(2Σ⁻¹(μ − θ̄) − 2ḡ).
 *
 * @throw std::invalid_argument unless 0 ≤ ρ < 1/4
 * @throw std::domain_error if Σ'⁻¹ is not positive definite
 */
inline GaussianParams sdb_natural_update(const Eigen::VectorXd& mu,
                                         const Eigen::MatrixXd& Sigma,
                                         const BatchStats& s, double rho) {
  if (!(rho >= 0 && rho < 0.25))
    throw std::invalid_argument("sdb_natural_update: need 0 <= rho < 1/4");
  const Eigen::Index d = mu.size();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("sdb_natural_update: Σ not positive definite");
  const Eigen::MatrixXd P = llt.solve(I);
  Eigen::MatrixXd P_next = P + 2.0 * rho * (s.V() - P * s.U(mu) * P);
  P_next = 0.5 * (P_next + P_next.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt_next(P_next);
  if (llt_next.info() != Eigen::Success)
    throw std::domain_error("sdb_natural_update: precision lost definiteness");
  GaussianParams out;
  out.Sigma = llt_next.solve(I);
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose()).eval();
  out.mu = mu - rho * llt_next.solve(2.0 * P * (mu - s.theta_bar)
                                     - 2.0 * s.g_bar);
  return out;
}

/// Infinite-batch step: the batch statistics are replaced by their limits.
inline GaussianParams sdb_natural_step(const Eigen::VectorXd& mu,
                                       const Eigen::MatrixXd& Sigma,
                                       const GaussianTarget& target,
                                       double rho) {
  return sdb_natural_update(
      mu, Sigma, batch_stats_limits(target.lambda(), target.nu(), mu, Sigma), rho);
}

/// Finite-batch step with B draws from N(μ, Σ).
inline GaussianParams sdb_natural_step(const Eigen::VectorXd& mu,
                                       const Eigen::MatrixXd& Sigma,
                                       const GaussianTarget& target, double rho,
                                       long long B, std::mt19937_64& rng) {
  if (B < 2)
    throw std::invalid_argument("sdb_natural_step: need B >= 2");
  const Eigen::Index d = mu.size();
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("sdb_natural_step: Σ not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  std::normal_distribution<double> n01;
  BatchStatsAccumulator acc(static_cast<int>(d));
  constexpr long long kChunk = 4096;
  for (long long done = 0; done < B; done += kChunk) {
    const long long n = std::min(kChunk, B - done);
    Eigen::MatrixXd Z(d, n);
    for (long long j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < d; ++i)
        Z(i, j) = n01(rng);
    const Eigen::MatrixXd thetas = (L * Z).colwise() + mu;
    const Eigen::MatrixXd grads =
        -(target.lambda() * (thetas.colwise() - target.nu()));
    acc.add(thetas, grads);
  }
  return sdb_natural_update(mu, Sigma, acc.finish(), rho);
}

/// Symmetric square root of an SPD matrix and its inverse.
struct SymmetricRoot {
  Eigen::MatrixXd root, inv_root;
};

inline SymmetricRoot symmetric_root(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0))
    throw std::invalid_argument("symmetric_root: matrix not SPD");
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::VectorXd r = es.eigenvalues().cwiseSqrt();
  return {Q * r.asDiagonal() * Q.transpose(),
          Q * r.cwiseInverse().asDiagonal() * Q.transpose()};
}

/// J = Λ^{-1/2}Σ⁻¹Λ^{-1/2}, ε = Λ^{1/2}(μ − ν), β = 1 − 2ρ.
inline RecursionState to_recursion_state(const GaussianParams& q,
                                         const GaussianTarget& target,
                                         double rho) {
  const SymmetricRoot R = symmetric_root(target.lambda());
  const Eigen::Index d = q.mu.size();
  const Eigen::MatrixXd P =
      q.Sigma.llt().solve(Eigen::MatrixXd::Identity(d, d));
  RecursionState s;
  s.J = R.inv_root * P * R.inv_root;
  s.J = 0.5 * (s.J + s.J.transpose()).eval();
  s.eps = R.root * (q.mu - target.nu());
  s.beta = 1.0 - 2.0 * rho;
  return s;
}

}  // namespace wfvi

#endif
