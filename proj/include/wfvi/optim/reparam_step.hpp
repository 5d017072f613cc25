#ifndef WFVI_OPTIM_REPARAM_STEP_HPP
#define WFVI_OPTIM_REPARAM_STEP_HPP

#include <wfvi/core/chol_factor.hpp>
#include <wfvi/core/errors.hpp>
#include <wfvi/optim/variational_state.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>

#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace wfvi {

/**
 * Single-draw reparameterization gradients at θ = μ + T⁻ᵀz.
 *
 * grad_mu and grad_T are in descent orientation (the negative ELBO for
 * KLD, the divergence itself for FDr/SDr). grad_T holds pattern entries of
 * the gradient with respect to T; grad_star = D grad_T is the gradient with
 * respect to T*.
 */
struct ReparamGradient {
  Eigen::VectorXd theta;
  Eigen::VectorXd grad_mu;
  Eigen::VectorXd grad_T;
  Eigen::VectorXd grad_star;
};

namespace detail {
// Pattern entries of a bᵀ - c dᵀ.
inline Eigen::VectorXd pattern_rank2(const SparsityPattern& p,
                                     const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& c,
                                     const Eigen::VectorXd& d) {
  Eigen::VectorXd out(p.nnz());
  for (int k = 0; k < p.nnz(); ++k)
    out(k) = a(p.row(k)) * b(p.col(k)) - c(p.row(k)) * d(p.col(k));
  return out;
}
}  // namespace detail

template <TargetModel M>
ReparamGradient reparam_gradient(const M& model, const Eigen::VectorXd& mu,
                                 const CholFactor& T, Divergence div,
                                 Eigen::VectorXd z) {
  if (is_batch(div))
    throw std::invalid_argument("reparam_gradient: " + to_string(div)
                                + " is a batch divergence");
  const int d = T.dim();
  if (model.dim() != d || mu.size() != d || z.size() != d)
    throw std::invalid_argument("reparam_gradient: dimension mismatch");
  const SparsityPattern& p = T.pattern();
  ReparamGradient out;
  const Eigen::VectorXd u = T.solve_upper_transpose(z);
  out.theta = mu + u;
  Eigen::VectorXd g = model.grad_log_h(out.theta);
  check_finite(g, "score");
  g += T.multiply(z);

  if (div == Divergence::KLD) {
    const Eigen::VectorXd v = T.solve_lower(g);
    out.grad_mu = -g;
    out.grad_T = pattern_outer(p, u, v);
  } else {
    if (div == Divergence::SDr) {
      g = T.solve_lower(g);
      z -= g;
      g = T.solve_upper_transpose(g);
    }
    const SparseMatrix H = model.hess_log_h(out.theta);
    const Eigen::VectorXd w = H * g;
    check_finite(w, "Hessian product");
    const Eigen::VectorXd v = T.solve_lower(w);
    out.grad_mu = 2.0 * w;
    out.grad_T = 2.0 * detail::pattern_rank2(p, g, z, u, v);
  }
  out.grad_star = DiagScaler(T).apply(out.grad_T);
  check_finite(out.grad_mu, "mean gradient");
  check_finite(out.grad_star, "factor gradient");
  return out;
}

/// Outcome of one optimizer iteration.
struct StepInfo {
  bool accepted = false;
  /// One-sample lower bound log h(θ) - log q(θ); NaN when unavailable.
  double lower_bound = std::numeric_limits<double>::quiet_NaN();
  std::string reject_reason;
};

namespace detail {
inline bool commit_if_finite(VariationalState& state, VariationalState next,
                             StepInfo& info) {
  if (!next.mu.allFinite() || !next.factor.values().allFinite()) {
    info.accepted = false;
    info.reject_reason = "non-finite parameters after step";
    return false;
  }
  ++next.iter;
  state = std::move(next);
  info.accepted = true;
  return true;
}
}  // namespace detail

/**
 * One KLD, FDr or SDr iteration with the given standard normal draw. The
 * lower bound reuses the same θ. On a non-finite gradient the state is left
 * unchanged and the step is reported as rejected.
 */
template <TargetModel M>
StepInfo reparam_update(VariationalState& state, const M& model, Divergence div,
                        const Eigen::VectorXd& z, const StepSettings& settings = {}) {
  StepInfo info;
  ReparamGradient rg;
  try {
    rg = reparam_gradient(model, state.mu, state.factor, div, z);
    info.lower_bound = model.log_h(rg.theta) - state.log_q_from_z(z);
  } catch (const NonFiniteError& e) {
    info.reject_reason = e.what();
    return info;
  }
  VariationalState next = state;
  next.mu += take_step(next, settings, rg.grad_mu, 0);
  next.factor.set_star(state.factor.star_values()
                       + take_step(next, settings, rg.grad_star, state.dim()));
  detail::commit_if_finite(state, std::move(next), info);
  return info;
}

inline Eigen::VectorXd standard_normal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i)
    z(i) = n01(rng);
  return z;
}

template <TargetModel M>
StepInfo reparam_update(VariationalState& state, const M& model, Divergence div,
                        std::mt19937_64& rng, const StepSettings& settings = {}) {
  return reparam_update(state, model, div, standard_normal(state.dim(), rng),
                        settings);
}

}  // namespace wfvi

#endif
