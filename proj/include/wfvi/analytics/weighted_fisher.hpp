#ifndef WFVI_ANALYTICS_WEIGHTED_FISHER_HPP
#define WFVI_ANALYTICS_WEIGHTED_FISHER_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace wfvi {

namespace detail {
inline void require_spd(const Eigen::MatrixXd& A, const char* name) {
  if (A.rows() != A.cols() || !A.isApprox(A.transpose(), 1e-10))
    throw std::invalid_argument(std::string(name) + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(name) + " must be positive definite");
}
}  // namespace detail

/**
 * M-weighted Fisher divergence E_q‖∇log q − ∇log p‖²_M between
 * q = N(μ, Σ) and p = N(ν, Λ⁻¹):
 *   tr(Σ⁻¹M) + tr(ΛMΛΣ) − 2 tr(MΛ) + (μ−ν)ᵀΛMΛ(μ−ν).
 *
 * @throw std::invalid_argument if Σ or Λ is not SPD or shapes disagree
 */
inline double weighted_fd_gaussians(const Eigen::VectorXd& mu,
                                    const Eigen::MatrixXd& Sigma,
                                    const Eigen::VectorXd& nu,
                                    const Eigen::MatrixXd& Lambda,
                                    const Eigen::MatrixXd& M) {
  const Eigen::Index d = mu.size();
  if (nu.size() != d || Sigma.rows() != d || Lambda.rows() != d
      || M.rows() != d || M.cols() != d)
    throw std::invalid_argument("weighted_fd_gaussians: dimension mismatch");
  detail::require_spd(Sigma, "Sigma");
  detail::require_spd(Lambda, "Lambda");
  if (!M.isApprox(M.transpose(), 1e-10))
    throw std::invalid_argument("M must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  const Eigen::MatrixXd SinvM = llt.solve(M);
  const Eigen::MatrixXd LML = Lambda * M * Lambda;
  const Eigen::VectorXd r = mu - nu;
  return SinvM.trace() + (LML * Sigma).trace() - 2.0 * (M * Lambda).trace()
         + r.dot(LML * r);
}

}  // namespace wfvi

#endif
