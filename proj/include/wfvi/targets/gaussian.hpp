#ifndef WFVI_TARGETS_GAUSSIAN_HPP
#define WFVI_TARGETS_GAUSSIAN_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/core/sparsity_pattern.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace wfvi {

/// Gaussian target N(ν, Λ⁻¹) with normalized log density.
class GaussianTarget {
 public:
  /**
   * @param nu mean
   * @param lambda symmetric positive definite precision
   * @param hint optional sparsity pattern for the factor; dense by default
   * @throw std::invalid_argument if Λ is not symmetric positive definite
   */
  GaussianTarget(Eigen::VectorXd nu, Eigen::MatrixXd lambda,
                 std::optional<SparsityPattern> hint = std::nullopt)
      : nu_(std::move(nu)), lambda_(std::move(lambda)) {
    const int d = static_cast<int>(nu_.size());
    if (d < 1 || lambda_.rows() != d || lambda_.cols() != d)
      throw std::invalid_argument("GaussianTarget: dimension mismatch");
    if (!lambda_.isApprox(lambda_.transpose(), 1e-12))
      throw std::invalid_argument("GaussianTarget: precision not symmetric");
    llt_.compute(lambda_);
    if (llt_.info() != Eigen::Success)
      throw std::invalid_argument(
          "GaussianTarget: precision not positive definite");
    const Eigen::MatrixXd L = llt_.matrixL();
    log_norm_ = L.diagonal().array().log().sum()
                - 0.5 * d * std::log(2.0 * std::numbers::pi);
    hint_ = hint ? *hint : SparsityPattern::dense(d);
    if (hint_.dim() != d)
      throw std::invalid_argument("GaussianTarget: hint dimension mismatch");
    hess_ = (-lambda_).sparseView();
  }

  int dim() const { return static_cast<int>(nu_.size()); }
  const Eigen::VectorXd& nu() const { return nu_; }
  const Eigen::MatrixXd& lambda() const { return lambda_; }
  Eigen::MatrixXd covariance() const {
    return llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  }
  const SparsityPattern& sparsity_hint() const { return hint_; }

  double log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd r = theta - nu_;
    return check_finite(log_norm_ - 0.5 * r.dot(lambda_ * r),
                        "Gaussian log density");
  }

  Eigen::VectorXd grad_log_h(const Eigen::VectorXd& theta) const {
    return -(lambda_ * (theta - nu_));
  }

  SparseMatrix hess_log_h(const Eigen::VectorXd&) const { return hess_; }

 private:
  Eigen::VectorXd nu_;
  Eigen::MatrixXd lambda_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_norm_ = 0;
  SparsityPattern hint_;
  SparseMatrix hess_;
};

/**
 * Multivariate Student-t target t_ν(m, S) with normalized log density.
 */
class StudentTTarget {
 public:
  StudentTTarget(double nu, Eigen::VectorXd m, Eigen::MatrixXd S)
      : nu_(nu), m_(std::move(m)), S_(std::move(S)) {
    const int d = static_cast<int>(m_.size());
    if (!(nu_ > 0))
      throw std::invalid_argument("StudentTTarget: nu must be positive");
    if (S_.rows() != d || S_.cols() != d)
      throw std::invalid_argument("StudentTTarget: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(S_);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("StudentTTarget: scale not positive definite");
    S_inv_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd L = llt.matrixL();
    log_norm_ = std::lgamma(0.5 * (nu_ + d)) - std::lgamma(0.5 * nu_)
                - 0.5 * d * std::log(nu_ * std::numbers::pi)
                - L.diagonal().array().log().sum();
  }

  int dim() const { return static_cast<int>(m_.size()); }
  double nu() const { return nu_; }
  const Eigen::VectorXd& location() const { return m_; }
  SparsityPattern sparsity_hint() const { return SparsityPattern::dense(dim()); }

  double log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd r = theta - m_;
    const double q = r.dot(S_inv_ * r);
    return check_finite(log_norm_ - 0.5 * (nu_ + dim()) * std::log1p(q / nu_),
                        "Student-t log density");
  }

  Eigen::VectorXd grad_log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd Sr = S_inv_ * (theta - m_);
    const double q = (theta - m_).dot(Sr);
    return -(nu_ + dim()) / (nu_ + q) * Sr;
  }

  SparseMatrix hess_log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd Sr = S_inv_ * (theta - m_);
    const double q = (theta - m_).dot(Sr);
    const double c = nu_ + dim();
    const Eigen::MatrixXd H = -c / (nu_ + q) * S_inv_
                              + 2.0 * c / ((nu_ + q) * (nu_ + q))
                                    * Sr * Sr.transpose();
    return H.sparseView();
  }

 private:
  double nu_;
  Eigen::VectorXd m_;
  Eigen::MatrixXd S_;
  Eigen::MatrixXd S_inv_;
  double log_norm_ = 0;
};

}  // namespace wfvi

#endif
