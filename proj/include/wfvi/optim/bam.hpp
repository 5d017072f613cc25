#ifndef WFVI_OPTIM_BAM_HPP
#define WFVI_OPTIM_BAM_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/optim/batch_stats.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace wfvi {

/// Covariance updates with a larger condition number are rejected.
inline constexpr double kBamMaxCondition = 1e12;

struct BamUpdate {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  bool accepted = false;
  double condition = 0.0;
};

/**
 * Batch-and-match update: the minimizer over (μ', Σ') of the batch
 * score-based divergence plus (2/λ) KL(q_t ‖ q'), given batch statistics
 * drawn from q_t = N(μ, Σ).
 *
 * With U = λC_g + λ/(1+λ) ḡḡᵀ and V = Σ + λC_θ + λ/(1+λ)(μ-θ̄)(μ-θ̄)ᵀ,
 * Σ' = 2V(I + (I + 4UV)^{1/2})⁻¹, evaluated in the symmetric form
 * 2V^{1/2}(I + (I + 4V^{1/2}UV^{1/2})^{1/2})⁻¹V^{1/2}, and
 * μ' = μ/(1+λ) + λ/(1+λ)(Σ'ḡ + θ̄).
 * On a condition number above kBamMaxCondition the input is returned with
 * accepted = false.
 */
inline BamUpdate bam_update(const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& Sigma, const BatchStats& s,
                            double lambda) {
  const Eigen::Index d = mu.size();
  if (Sigma.rows() != d || Sigma.cols() != d || s.theta_bar.size() != d)
    throw std::invalid_argument("bam_update: dimension mismatch");
  if (!(lambda > 0))
    throw std::invalid_argument("bam_update: learning rate must be positive");
  const double a = lambda / (1.0 + lambda);
  const Eigen::VectorXd r = mu - s.theta_bar;
  Eigen::MatrixXd U = lambda * s.C_g + a * s.g_bar * s.g_bar.transpose();
  Eigen::MatrixXd V = Sigma + lambda * s.C_theta + a * r * r.transpose();
  U = 0.5 * (U + U.transpose()).eval();
  V = 0.5 * (V + V.transpose()).eval();

  BamUpdate out;
  out.mu = mu;
  out.Sigma = Sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(V);
  if (ev.info() != Eigen::Success || !(ev.eigenvalues().minCoeff() > 0)) {
    out.condition = std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::MatrixXd Vh = ev.eigenvectors()
                             * ev.eigenvalues().cwiseSqrt().asDiagonal()
                             * ev.eigenvectors().transpose();
  Eigen::MatrixXd Mm = Vh * U * Vh;
  Mm = 0.5 * (Mm + Mm.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(Mm);
  const Eigen::ArrayXd m = em.eigenvalues().array().max(0.0);
  const Eigen::VectorXd inv = (1.0 + (1.0 + 4.0 * m).sqrt()).inverse().matrix();
  const Eigen::MatrixXd K =
      em.eigenvectors() * inv.asDiagonal() * em.eigenvectors().transpose();
  Eigen::MatrixXd S = 2.0 * Vh * K * Vh;
  S = 0.5 * (S + S.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  out.condition = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(out.condition <= kBamMaxCondition) || !S.allFinite())
    return out;
  out.Sigma = S;
  out.mu = mu / (1.0 + lambda) + a * (S * s.g_bar + s.theta_bar);
  out.accepted = out.mu.allFinite();
  if (!out.accepted) {
    out.mu = mu;
    out.Sigma = Sigma;
  }
  return out;
}

/// BaM objective: batch score-based divergence + (2/λ) KL(N(μ_t,Σ_t) ‖ N(μ,Σ)).
inline double bam_objective(const BatchStats& s, const Eigen::VectorXd& mu_t,
                            const Eigen::MatrixXd& Sigma_t,
                            const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& Sigma, double lambda) {
  const Eigen::Index d = mu.size();
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("bam_objective: Σ not positive definite");
  const Eigen::MatrixXd Sinv = llt.solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::VectorXd r = mu - mu_t;
  const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal()
                                  .array().log().sum();
  Eigen::LLT<Eigen::MatrixXd> llt_t(Sigma_t);
  const double logdet_t = 2.0 * Eigen::MatrixXd(llt_t.matrixL()).diagonal()
                                    .array().log().sum();
  const double kl = 0.5 * ((Sinv * Sigma_t).trace() + r.dot(Sinv * r)
                           - static_cast<double>(d) + logdet - logdet_t);
  return s.sd_objective(mu, Sigma) + 2.0 / lambda * kl;
}

/**
 * One BaM iteration at step t ≥ 1 with learning rate λ_t = B d / t: draws B
 * points from N(μ, Σ), evaluates scores and applies bam_update.
 */
template <TargetModel M>
BamUpdate bam_step(const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma,
                   const M& model, int B, long long t, std::mt19937_64& rng) {
  if (B < 2 || t < 1)
    throw std::invalid_argument("bam_step: need B >= 2 and t >= 1");
  const int d = static_cast<int>(mu.size());
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("bam_step: Σ not positive definite");
  std::normal_distribution<double> n01;
  Eigen::MatrixXd Z(d, B);
  for (int j = 0; j < B; ++j)
    for (int i = 0; i < d; ++i)
      Z(i, j) = n01(rng);
  const Eigen::MatrixXd thetas =
      (Eigen::MatrixXd(llt.matrixL()) * Z).colwise() + mu;
  Eigen::MatrixXd grads(d, B);
  for (int j = 0; j < B; ++j)
    grads.col(j) = model.grad_log_h(thetas.col(j));
  if (!grads.allFinite()) {
    BamUpdate out{mu, Sigma, false, 0.0};
    return out;
  }
  const double lambda = static_cast<double>(B) * d / static_cast<double>(t);
  return bam_update(mu, Sigma, BatchStats::from_samples(thetas, grads), lambda);
}

struct BamFit {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  long long iterations = 0;
  long long rejected_steps = 0;
};

template <TargetModel M>
BamFit bam_fit(const M& model, Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0,
               int B, long long max_iter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BamFit f{std::move(mu0), std::move(Sigma0), 0, 0};
  for (long long t = 1; t <= max_iter; ++t) {
    BamUpdate u = bam_step(f.mu, f.Sigma, model, B, t, rng);
    f.iterations = t;
    if (!u.accepted) {
      ++f.rejected_steps;
      continue;
    }
    f.mu = std::move(u.mu);
    f.Sigma = std::move(u.Sigma);
  }
  return f;
}

}  // namespace wfvi

#endif
