#ifndef WFVI_UNILAB_STATIONARITY_HPP
#define WFVI_UNILAB_STATIONARITY_HPP

#include <wfvi/targets/gaussian.hpp>
#include <wfvi/unilab/objective.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace wfvi {

/**
 * Gradient of each objective with respect to μ for a Student's t target,
 * in the order KLD, FD, SD. Univariate checks are exact up to quadrature
 * (standard errors zero); multivariate checks are Monte-Carlo averages over
 * common draws with per-coordinate standard errors.
 */
struct StationarityReport {
  std::array<Eigen::VectorXd, 3> grad_mu;
  std::array<Eigen::VectorXd, 3> std_error;

  double grad_norm(int k) const { return grad_mu[k].norm(); }
  /// Largest |gradient| / standard error over coordinates and objectives.
  double max_t_stat() const {
    double t = 0;
    for (int k = 0; k < 3; ++k)
      for (Eigen::Index i = 0; i < grad_mu[k].size(); ++i)
        if (std_error[k](i) > 0)
          t = std::max(t, std::abs(grad_mu[k](i)) / std_error[k](i));
    return t;
  }
};

/// Univariate t(ν) target, q = N(shift, σ²); shift = 0 is the stationary point.
inline StationarityReport stationarity_check_t(double nu, double sigma_sq,
                                               double shift = 0.0) {
  const UniTarget target = UniTarget::student_t(nu);
  StationarityReport rep;
  const UniDivergence divs[3] = {UniDivergence::KLD, UniDivergence::FD,
                                 UniDivergence::SD};
  for (int k = 0; k < 3; ++k) {
    const auto v = uni_objective_with_gradient(target, divs[k], shift,
                                               sigma_sq, 400);
    rep.grad_mu[k] = Eigen::VectorXd::Constant(1, v.d_mu);
    rep.std_error[k] = Eigen::VectorXd::Zero(1);
  }
  return rep;
}

/**
 * Multivariate t_ν(m, S) target and q = N(m + shift, Σ). Per draw
 * θ = μ + Lz with Σ = LLᵀ and r = ∇log p(θ) + L⁻ᵀz:
 *   KLD: −∇log p(θ),  FD: 2∇²log p(θ) r,  SD: 2∇²log p(θ) Σ r.
 */
inline StationarityReport stationarity_check_t(
    double nu, const Eigen::VectorXd& m, const Eigen::MatrixXd& S,
    const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& shift, int n_draws,
    std::uint64_t seed) {
  const Eigen::Index d = m.size();
  if (Sigma.rows() != d || shift.size() != d)
    throw std::invalid_argument("stationarity_check_t: dimension mismatch");
  if (n_draws < 2)
    throw std::invalid_argument("stationarity_check_t: need >= 2 draws");
  const StudentTTarget target(nu, m, S);
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("stationarity_check_t: Sigma not SPD");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::VectorXd mu = m + shift;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::array<Eigen::VectorXd, 3> sum, sum2;
  for (int k = 0; k < 3; ++k) {
    sum[k] = Eigen::VectorXd::Zero(d);
    sum2[k] = Eigen::VectorXd::Zero(d);
  }
  Eigen::VectorXd z(d);
  for (int n = 0; n < n_draws; ++n) {
    for (Eigen::Index i = 0; i < d; ++i)
      z(i) = n01(rng);
    const Eigen::VectorXd theta = mu + L * z;
    const Eigen::VectorXd g = target.grad_log_h(theta);
    const Eigen::MatrixXd H = Eigen::MatrixXd(target.hess_log_h(theta));
    const Eigen::VectorXd r
        = g + L.transpose().triangularView<Eigen::Upper>().solve(z);
    const Eigen::VectorXd est[3] = {-g, 2.0 * H * r, 2.0 * H * (Sigma * r)};
    for (int k = 0; k < 3; ++k) {
      sum[k] += est[k];
      sum2[k] += est[k].cwiseAbs2();
    }
  }
  StationarityReport rep;
  for (int k = 0; k < 3; ++k) {
    rep.grad_mu[k] = sum[k] / n_draws;
    const Eigen::VectorXd var
        = (sum2[k] / n_draws - rep.grad_mu[k].cwiseAbs2()) * n_draws
          / (n_draws - 1.0);
    rep.std_error[k] = (var.cwiseMax(0.0) / n_draws).cwiseSqrt();
  }
  return rep;
}

}  // namespace wfvi

#endif
