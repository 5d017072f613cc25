#ifndef WFVI_OPTIM_BATCH_STEP_HPP
#define WFVI_OPTIM_BATCH_STEP_HPP

#include <wfvi/core/chol_factor.hpp>
#include <wfvi/core/errors.hpp>
#include <wfvi/optim/reparam_step.hpp>
#include <wfvi/optim/variational_state.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

namespace wfvi {

/**
 * One FDb or SDb update from a batch of draws θ_i (columns of thetas) and
 * their scores g_h(θ_i) (columns of grads).
 *
 * U, V and W are never formed: with A = [(θ_i - θ̄)/√B, μ - θ̄] and
 * G = [(g_i - ḡ)/√B, ḡ] we have U = AAᵀ and V = GGᵀ, so every term of g_T
 * is a low-rank product whose pattern entries come from pattern_outer.
 * For FDb, W uses the mean after its update, in the order of the listing.
 */
inline StepInfo batch_step_samples(VariationalState& state,
                                   const Eigen::MatrixXd& thetas,
                                   const Eigen::MatrixXd& grads, Divergence div,
                                   const StepSettings& settings = {}) {
  if (!is_batch(div))
    throw std::invalid_argument("batch_step: " + to_string(div)
                                + " is not a batch divergence");
  const int d = state.dim();
  const Eigen::Index B = thetas.cols();
  if (B < 2)
    throw std::invalid_argument("batch_step: batch size must be at least 2");
  if (thetas.rows() != d || grads.rows() != d || grads.cols() != B)
    throw std::invalid_argument("batch_step: shape mismatch");
  StepInfo info;
  if (!grads.allFinite()) {
    info.reject_reason = NonFiniteError("score").what();
    return info;
  }
  const CholFactor& T = state.factor;
  const SparsityPattern& p = T.pattern();
  const double s = 1.0 / std::sqrt(static_cast<double>(B));
  const Eigen::VectorXd theta_bar = thetas.rowwise().mean();
  const Eigen::VectorXd g_bar = grads.rowwise().mean();

  Eigen::MatrixXd A(d, B + 1);
  A.leftCols(B) = (thetas.colwise() - theta_bar) * s;
  A.col(B) = state.mu - theta_bar;
  Eigen::MatrixXd G(d, B + 1);
  G.leftCols(B) = (grads.colwise() - g_bar) * s;
  G.col(B) = g_bar;

  const Eigen::MatrixXd TtA = T.multiply_transpose(A);
  const Eigen::MatrixXd OA = T.multiply(TtA);
  const Eigen::VectorXd g_mu = 2.0 * OA.col(B) - 2.0 * g_bar;

  VariationalState next = state;
  Eigen::VectorXd g_T;
  if (div == Divergence::SDb) {
    next.mu += take_step(next, settings, g_mu, 0);
    const Eigen::MatrixXd Y = T.solve_lower(G);
    const Eigen::MatrixXd SG = T.solve_upper_transpose(Y);
    Eigen::MatrixXd L(d, 2 * (B + 1)), R(d, 2 * (B + 1));
    L << A, -SG;
    R << TtA, Y;
    g_T = 2.0 * pattern_outer(p, L, R);
  } else {
    const Eigen::VectorXd raw_mu = T.multiply(T.multiply_transpose(g_mu));
    next.mu += take_step(next, settings, raw_mu, 0);
    Eigen::MatrixXd P = A;
    P.col(B) = -(next.mu - theta_bar);
    const Eigen::MatrixXd& Q = G;
    Eigen::MatrixXd L(d, 4 * (B + 1)), R(d, 4 * (B + 1));
    L << P, Q, OA, A;
    R << T.multiply_transpose(Q), T.multiply_transpose(P), TtA,
        T.multiply_transpose(OA);
    g_T = 2.0 * pattern_outer(p, L, R);
  }
  const Eigen::VectorXd g_star = DiagScaler(T).apply(g_T);
  if (!g_star.allFinite()) {
    info.reject_reason = NonFiniteError("factor gradient").what();
    return info;
  }
  next.factor.set_star(T.star_values() + take_step(next, settings, g_star, d));
  detail::commit_if_finite(state, std::move(next), info);
  return info;
}

/// Draws θ_i = μ + T⁻ᵀz_i as columns.
inline Eigen::MatrixXd sample_q(const VariationalState& state, Eigen::Index n,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd Z(state.dim(), n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int i = 0; i < state.dim(); ++i)
      Z(i, j) = n01(rng);
  return state.factor.solve_upper_transpose(Z).colwise() + state.mu;
}

/**
 * One FDb or SDb iteration: draws B points from q, evaluates scores, and
 * updates. The lower bound uses one further draw taken before the update.
 */
template <TargetModel M>
StepInfo batch_update(VariationalState& state, const M& model, Divergence div,
                      int B, std::mt19937_64& rng,
                      const StepSettings& settings = {}) {
  if (model.dim() != state.dim())
    throw std::invalid_argument("batch_update: dimension mismatch");
  const Eigen::MatrixXd thetas = sample_q(state, B, rng);
  const Eigen::VectorXd z0 = standard_normal(state.dim(), rng);
  Eigen::MatrixXd grads(state.dim(), B);
  double lb = std::numeric_limits<double>::quiet_NaN();
  try {
    for (int j = 0; j < B; ++j)
      grads.col(j) = model.grad_log_h(thetas.col(j));
    const Eigen::VectorXd theta0 =
        state.mu + state.factor.solve_upper_transpose(z0);
    lb = model.log_h(theta0) - state.log_q_from_z(z0);
  } catch (const NonFiniteError& e) {
    StepInfo info;
    info.reject_reason = e.what();
    return info;
  }
  StepInfo info = batch_step_samples(state, thetas, grads, div, settings);
  info.lower_bound = lb;
  return info;
}

}  // namespace wfvi

#endif
