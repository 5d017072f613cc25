#ifndef WFVI_ANALYTICS_GRADIENT_VARIANCE_HPP
#define WFVI_ANALYTICS_GRADIENT_VARIANCE_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace wfvi {

/**
 * Per-coordinate variances of single-draw reparameterization gradients for
 * a Gaussian target with diagonal Λ and a factor with diagonal T. Gradients
 * are taken with respect to μ and the diagonal of T.
 */
struct GradientVariances {
  Eigen::VectorXd kl_mu, fd_mu, sd_mu;
  Eigen::VectorXd kl_T, fd_T, sd_T;
};

inline GradientVariances grad_variance_formulas(const Eigen::VectorXd& lambda_diag,
                                                const Eigen::VectorXd& T_diag,
                                                const Eigen::VectorXd& mu,
                                                const Eigen::VectorXd& nu) {
  const Eigen::Index d = lambda_diag.size();
  if (T_diag.size() != d || mu.size() != d || nu.size() != d)
    throw std::invalid_argument("grad_variance_formulas: length mismatch");
  const Eigen::ArrayXd L = lambda_diag.array();
  const Eigen::ArrayXd T = T_diag.array();
  const Eigen::ArrayXd T2 = T.square();
  const Eigen::ArrayXd dm2 = (mu - nu).array().square();
  const Eigen::ArrayXd a2 = (T - L / T).square();
  GradientVariances v;
  v.kl_mu = (T2 - 2.0 * L + L.square() / T2).matrix();
  v.fd_mu = (4.0 * L.square() * v.kl_mu.array()).matrix();
  v.sd_mu = (4.0 * L.square() / T2.square() * v.kl_mu.array()).matrix();
  v.kl_T = (T2.square().inverse() * (L.square() * dm2 + 2.0 * a2)).matrix();
  v.fd_T = (4.0 * (T2 + L).square() * v.kl_T.array()).matrix();
  v.sd_T = (4.0 * L.square() / T2.pow(4)
            * ((3.0 * L - T2).square() * dm2 + 8.0 * a2))
               .matrix();
  return v;
}

}  // namespace wfvi

#endif
