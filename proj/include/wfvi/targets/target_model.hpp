#ifndef WFVI_TARGETS_TARGET_MODEL_HPP
#define WFVI_TARGETS_TARGET_MODEL_HPP

#include <wfvi/core/sparsity_pattern.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <concepts>

namespace wfvi {

using SparseMatrix = Eigen::SparseMatrix<double>;

/**
 * A posterior target h(θ) = p(y | θ) p(θ).
 *
 * log_h returns the log joint density, grad_log_h its gradient, and
 * hess_log_h the full symmetric Hessian with nonzeros confined to the
 * sparsity hint and its transpose.
 */
template <typename M>
concept TargetModel = requires(const M& m, const Eigen::VectorXd& theta) {
  { m.dim() } -> std::convertible_to<int>;
  { m.log_h(theta) } -> std::convertible_to<double>;
  { m.grad_log_h(theta) } -> std::convertible_to<Eigen::VectorXd>;
  { m.hess_log_h(theta) } -> std::convertible_to<SparseMatrix>;
  { m.sparsity_hint() } -> std::convertible_to<SparsityPattern>;
};

}  // namespace wfvi

#endif
