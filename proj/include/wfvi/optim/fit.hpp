#ifndef WFVI_OPTIM_FIT_HPP
#define WFVI_OPTIM_FIT_HPP

#include <wfvi/core/chol_factor.hpp>
#include <wfvi/optim/batch_step.hpp>
#include <wfvi/optim/reparam_step.hpp>
#include <wfvi/optim/variational_state.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

struct FitConfig {
  Divergence divergence = Divergence::KLD;
  /// Batch size for FDb/SDb.
  int batch_size = 5;
  long long max_iter = 50000;
  /// Iterations per lower-bound average.
  int window = 1000;
  std::uint64_t seed = 0;
  AdadeltaParams adadelta;
  /// Constant stepsize instead of Adadelta when > 0.
  double fixed_rate = 0.0;
  /// Stop once the OLS slope over the last stop_points averages is negative.
  bool stop_rule = true;
  int stop_points = 5;
  int max_consecutive_rejects = 50;
  std::optional<Eigen::VectorXd> init_mu;
  /// Initial factor T = init_T_scale · I.
  double init_T_scale = 1.0;
  /// Factor pattern; the model's sparsity hint when absent.
  std::optional<SparsityPattern> pattern;
};

struct FitResult {
  VariationalState state;
  Divergence divergence = Divergence::KLD;
  /// Window means of the one-sample lower bound; the last may be partial.
  std::vector<double> lower_bound_trace;
  long long iterations = 0;
  std::uint64_t seed = 0;
  /// "plateau" or "max_iter".
  std::string stop_reason;
  long long rejected_steps = 0;
  FitConfig config;
  /// Wall-clock time. Kept out of the JSON document.
  double seconds = 0.0;
};

/// Raised when too many consecutive steps are rejected.
class FitAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares slope of y against 0, 1, ..., n-1.
inline double ols_slope(const double* y, int n) {
  if (n < 2)
    throw std::invalid_argument("ols_slope: need at least two points");
  const double xbar = 0.5 * (n - 1);
  double ybar = 0;
  for (int i = 0; i < n; ++i)
    ybar += y[i];
  ybar /= n;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (i - xbar) * (y[i] - ybar);
    sxx += (i - xbar) * (i - xbar);
  }
  return sxy / sxx;
}

template <TargetModel M>
VariationalState initial_state(const M& model, const FitConfig& cfg) {
  const int d = model.dim();
  SparsityPattern p = cfg.pattern ? *cfg.pattern : SparsityPattern(model.sparsity_hint());
  if (p.dim() != d)
    throw std::invalid_argument("fit: pattern dimension does not match model");
  if (!(cfg.init_T_scale > 0))
    throw std::invalid_argument("fit: init_T_scale must be positive");
  Eigen::VectorXd mu = cfg.init_mu ? *cfg.init_mu : Eigen::VectorXd::Zero(d);
  if (mu.size() != d)
    throw std::invalid_argument("fit: init_mu has the wrong length");
  return VariationalState(std::move(mu),
                          CholFactor::scaled_identity(std::move(p),
                                                      cfg.init_T_scale),
                          cfg.adadelta);
}

/**
 * Runs reparameterization updates (KLD, FDr, SDr) or batch updates (FDb, SDb) from the
 * configured initial state.
 *
 * @throw FitAborted after more than max_consecutive_rejects rejected steps
 */
template <TargetModel M>
FitResult fit(const M& model, const FitConfig& cfg) {
  if (cfg.max_iter < 1 || cfg.window < 1)
    throw std::invalid_argument("fit: max_iter and window must be positive");
  if (cfg.stop_points < 2)
    throw std::invalid_argument("fit: stop_points must be at least 2");
  if (is_batch(cfg.divergence) && cfg.batch_size < 2)
    throw std::invalid_argument("fit: batch size must be at least 2");
  const auto t0 = std::chrono::steady_clock::now();
  FitResult res;
  res.divergence = cfg.divergence;
  res.seed = cfg.seed;
  res.config = cfg;
  res.state = initial_state(model, cfg);
  const StepSettings settings{cfg.fixed_rate};
  std::mt19937_64 rng(cfg.seed);

  double lb_sum = 0;
  int lb_count = 0, in_window = 0, consecutive = 0;
  auto close_window = [&] {
    res.lower_bound_trace.push_back(
        lb_count > 0 ? lb_sum / lb_count
                     : std::numeric_limits<double>::quiet_NaN());
    lb_sum = 0;
    lb_count = in_window = 0;
  };

  res.stop_reason = "max_iter";
  for (long long t = 1; t <= cfg.max_iter; ++t) {
    const StepInfo info =
        is_batch(cfg.divergence)
            ? batch_update(res.state, model, cfg.divergence, cfg.batch_size, rng,
                           settings)
            : reparam_update(res.state, model, cfg.divergence, rng, settings);
    res.iterations = t;
    if (std::isfinite(info.lower_bound)) {
      lb_sum += info.lower_bound;
      ++lb_count;
    }
    if (info.accepted) {
      consecutive = 0;
    } else {
      ++res.rejected_steps;
      if (++consecutive > cfg.max_consecutive_rejects)
        throw FitAborted("fit aborted at iteration " + std::to_string(t)
                         + " after " + std::to_string(consecutive)
                         + " consecutive rejected steps; last: "
                         + info.reject_reason);
    }
    if (++in_window == cfg.window) {
      close_window();
      const auto& tr = res.lower_bound_trace;
      const int k = cfg.stop_points;
      if (cfg.stop_rule && static_cast<int>(tr.size()) >= k
          && ols_slope(tr.data() + tr.size() - k, k) < 0) {
        res.stop_reason = "plateau";
        break;
      }
    }
  }
  if (in_window > 0)
    close_window();
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

}  // namespace wfvi

#endif
