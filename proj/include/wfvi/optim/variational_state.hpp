#ifndef WFVI_OPTIM_VARIATIONAL_STATE_HPP
#define WFVI_OPTIM_VARIATIONAL_STATE_HPP

#include <wfvi/core/chol_factor.hpp>
#include <wfvi/optim/adadelta.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wfvi {

enum class Divergence { KLD, FDr, SDr, FDb, SDb };

inline std::string to_string(Divergence d) {
  switch (d) {
    case Divergence::KLD: return "KLD";
    case Divergence::FDr: return "FDr";
    case Divergence::SDr: return "SDr";
    case Divergence::FDb: return "FDb";
    case Divergence::SDb: return "SDb";
  }
  return "?";
}

/// @throw std::invalid_argument on an unknown name
inline Divergence parse_divergence(std::string_view s) {
  for (Divergence d : {Divergence::KLD, Divergence::FDr, Divergence::SDr,
                       Divergence::FDb, Divergence::SDb})
    if (s == to_string(d))
      return d;
  throw std::invalid_argument("unknown divergence '" + std::string(s)
                              + "' (expected KLD, FDr, SDr, FDb or SDb)");
}

inline bool is_batch(Divergence d) {
  return d == Divergence::FDb || d == Divergence::SDb;
}

/**
 * Gaussian variational parameters λ = (μ, vech(T)) with q = N(μ, (TTᵀ)⁻¹),
 * plus the Adadelta accumulators laid out as [μ (d) | T* (nnz)].
 */
struct VariationalState {
  Eigen::VectorXd mu;
  CholFactor factor;
  Adadelta adadelta;
  long long iter = 0;

  VariationalState() = default;
  VariationalState(Eigen::VectorXd mu0, CholFactor T, AdadeltaParams ap = {})
      : mu(std::move(mu0)),
        factor(std::move(T)),
        adadelta(mu.size() + factor.nnz(), ap) {
    if (mu.size() != factor.dim())
      throw std::invalid_argument("VariationalState: dimension mismatch");
  }

  int dim() const { return static_cast<int>(mu.size()); }

  /// log q(θ) evaluated from the factor.
  double log_q(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = factor.multiply_transpose(theta - mu);
    return log_q_from_z(z);
  }

  /// log q(μ + T⁻ᵀz) = -d/2 log 2π + Σ log T_ii - ½‖z‖².
  double log_q_from_z(const Eigen::VectorXd& z) const {
    return -0.5 * dim() * std::log(2.0 * std::numbers::pi)
           + factor.sum_log_diag() - 0.5 * z.squaredNorm();
  }
};

/**
 * Stepsize rule. With fixed_rate > 0 the step is -fixed_rate * grad;
 * otherwise the state's Adadelta accumulators are used.
 */
struct StepSettings {
  double fixed_rate = 0.0;
};

inline Eigen::VectorXd take_step(VariationalState& s, const StepSettings& st,
                                 const Eigen::VectorXd& grad,
                                 Eigen::Index offset) {
  if (st.fixed_rate > 0)
    return -st.fixed_rate * grad;
  return s.adadelta.update(grad, offset);
}

}  // namespace wfvi

#endif
