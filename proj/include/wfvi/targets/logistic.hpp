#ifndef WFVI_TARGETS_LOGISTIC_HPP
#define WFVI_TARGETS_LOGISTIC_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/core/numerics.hpp>
#include <wfvi/core/sparsity_pattern.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wfvi {

/**
 * Bayesian logistic regression with prior θ ~ N(0, σ₀² I).
 *
 * log h(θ) = yᵀXθ - Σ log(1 + exp(X_iᵀθ)) - (d/2) log(2πσ₀²) - θᵀθ/(2σ₀²).
 */
class LogisticModel {
 public:
  LogisticModel(Eigen::MatrixXd X, Eigen::VectorXd y, double sigma0_sq = 100.0)
      : X_(std::move(X)), y_(std::move(y)), sigma0_sq_(sigma0_sq) {
    if (X_.rows() < 1 || X_.cols() < 1)
      throw std::invalid_argument("LogisticModel: empty design");
    if (y_.size() != X_.rows())
      throw std::invalid_argument("LogisticModel: response length mismatch");
    for (Eigen::Index i = 0; i < y_.size(); ++i)
      if (y_(i) != 0.0 && y_(i) != 1.0)
        throw std::invalid_argument("LogisticModel: responses must be 0 or 1");
    if (!(sigma0_sq_ > 0))
      throw std::invalid_argument("LogisticModel: prior variance must be > 0");
  }

  int dim() const { return static_cast<int>(X_.cols()); }
  int n() const { return static_cast<int>(X_.rows()); }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  double sigma0_sq() const { return sigma0_sq_; }
  SparsityPattern sparsity_hint() const { return SparsityPattern::dense(dim()); }

  double log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd eta = X_ * theta;
    double lik = y_.dot(eta);
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      lik -= softplus(eta(i));
    check_finite(lik, "logistic likelihood");
    const double prior = -0.5 * dim() * std::log(2.0 * std::numbers::pi
                                                 * sigma0_sq_)
                         - theta.squaredNorm() / (2.0 * sigma0_sq_);
    return check_finite(lik + prior, "logistic prior");
  }

  Eigen::VectorXd grad_log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd w = (X_ * theta).unaryExpr(&sigmoid);
    return check_finite(
        Eigen::VectorXd(X_.transpose() * (y_ - w) - theta / sigma0_sq_),
        "logistic gradient");
  }

  SparseMatrix hess_log_h(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd eta = X_ * theta;
    Eigen::VectorXd wdiag(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = sigmoid(eta(i));
      wdiag(i) = p * (1.0 - p);
    }
    Eigen::MatrixXd H = -(X_.transpose() * wdiag.asDiagonal() * X_);
    H.diagonal().array() -= 1.0 / sigma0_sq_;
    return check_finite(H, "logistic Hessian").sparseView();
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  double sigma0_sq_;
};

}  // namespace wfvi

#endif
