#ifndef WFVI_OPTIM_GRADIENT_STUDY_HPP
#define WFVI_OPTIM_GRADIENT_STUDY_HPP

#include <wfvi/optim/reparam_step.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace wfvi {

/// Per-coordinate sample moments of single-draw gradients for μ_i and T_ii.
struct GradientSpread {
  Divergence divergence = Divergence::KLD;
  Eigen::VectorXd mean_mu, var_mu;
  Eigen::VectorXd mean_T, var_T;

  Eigen::VectorXd sd_mu() const { return var_mu.cwiseSqrt(); }
  Eigen::VectorXd sd_T() const { return var_T.cwiseSqrt(); }
};

/**
 * Draws n_draws standard normal z at a fixed (μ, T) and records the
 * reparameterization gradients with respect to μ and diag(T) for each of
 * KLD, FDr and SDr. The same draws are shared across divergences.
 */
template <TargetModel M>
std::vector<GradientSpread> gradient_spread(const M& model,
                                            const Eigen::VectorXd& mu,
                                            const CholFactor& T,
                                            long long n_draws,
                                            std::uint64_t seed) {
  if (n_draws < 2)
    throw std::invalid_argument("gradient_spread: need at least two draws");
  const int d = T.dim();
  const Divergence divs[3] = {Divergence::KLD, Divergence::FDr,
                              Divergence::SDr};
  // Welford running mean and sum of squared deviations.
  std::vector<Eigen::VectorXd> mean(6, Eigen::VectorXd::Zero(d)),
      m2(6, Eigen::VectorXd::Zero(d));
  auto push = [&](int slot, const Eigen::VectorXd& x, double n) {
    const Eigen::VectorXd delta = x - mean[slot];
    mean[slot] += delta / n;
    m2[slot] += delta.cwiseProduct(x - mean[slot]);
  };
  Eigen::VectorXd diag_T(d);
  std::mt19937_64 rng(seed);
  for (long long n = 1; n <= n_draws; ++n) {
    const Eigen::VectorXd z = standard_normal(d, rng);
    for (int k = 0; k < 3; ++k) {
      const ReparamGradient g = reparam_gradient(model, mu, T, divs[k], z);
      for (int j = 0; j < d; ++j)
        diag_T(j) = g.grad_T(T.pattern().diag_index(j));
      push(2 * k, g.grad_mu, static_cast<double>(n));
      push(2 * k + 1, diag_T, static_cast<double>(n));
    }
  }
  const double dof = static_cast<double>(n_draws - 1);
  std::vector<GradientSpread> out(3);
  for (int k = 0; k < 3; ++k) {
    out[k].divergence = divs[k];
    out[k].mean_mu = mean[2 * k];
    out[k].var_mu = m2[2 * k] / dof;
    out[k].mean_T = mean[2 * k + 1];
    out[k].var_T = m2[2 * k + 1] / dof;
  }
  return out;
}

inline double median(Eigen::VectorXd v) {
  if (v.size() == 0)
    throw std::invalid_argument("median of empty vector");
  std::vector<double> x(v.data(), v.data() + v.size());
  const std::size_t m = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + m, x.end());
  if (x.size() % 2 == 1)
    return x[m];
  const double hi = x[m];
  return 0.5 * (hi + *std::max_element(x.begin(), x.begin() + m));
}

}  // namespace wfvi

#endif
