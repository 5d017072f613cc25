#ifndef WFVI_DIAGNOSTICS_COMPARE_HPP
#define WFVI_DIAGNOSTICS_COMPARE_HPP

#include <wfvi/core/chol_factor.hpp>
#include <wfvi/diagnostics/marginal.hpp>
#include <wfvi/diagnostics/mmd.hpp>
#include <wfvi/diagnostics/reference_samples.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wfvi {

struct CompareOptions {
  int replicates = 50;
  /// Draws per replicate from q and from the reference set.
  int m = 1000;
  std::uint64_t seed = 0;
  /// Worker threads for the replicates; 0 uses the hardware concurrency.
  int threads = 0;
};

/**
 * Per-coordinate accuracy of q = N(μ, (TTᵀ)⁻¹) against reference draws:
 * |μ - μ*|/σ*, |μ - m*|/σ* and σ/σ*, plus M* replicates. Coordinates with
 * σ* = 0 are flagged degenerate and their ratios set to NaN.
 */
struct ComparisonReport {
  std::vector<std::string> names;
  Eigen::VectorXd mean_error, mode_error, sd_ratio;
  std::vector<bool> degenerate;
  MarginalStats reference;
  std::vector<double> mstar;
  double mstar_mean = 0, mstar_sd = 0;
  double bandwidth = 0;
  int m = 0;
  std::uint64_t seed = 0;
  std::string provenance;
};

/// Generator for replicate r; streams depend only on (seed, r).
inline std::mt19937_64 replicate_rng(std::uint64_t seed, int r) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r)};
  return std::mt19937_64(seq);
}

/// m rows drawn without replacement (partial Fisher–Yates).
inline Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& X, int m,
                                      std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (m < 0 || static_cast<std::size_t>(m) > n)
    throw std::invalid_argument("subsample_rows: not enough rows");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd out(m, X.cols());
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.row(i) = X.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

/// m draws μ + T⁻ᵀz as rows.
inline Eigen::MatrixXd sample_gaussian_rows(const Eigen::VectorXd& mu,
                                            const CholFactor& T, int m,
                                            std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd Z(T.dim(), m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < T.dim(); ++i)
      Z(i, j) = n01(rng);
  return (T.solve_upper_transpose(Z).colwise() + mu).transpose();
}

/// Marginal standard deviations sqrt(diag(T⁻ᵀT⁻¹)).
inline Eigen::VectorXd marginal_sd(const CholFactor& T) {
  const Eigen::MatrixXd Tinv =
      T.solve_lower(Eigen::MatrixXd::Identity(T.dim(), T.dim()));
  return Tinv.colwise().norm().transpose();
}

/**
 * @throw std::invalid_argument if dimensions differ, the reference set has
 *        fewer than m draws, or m < 2
 */
inline ComparisonReport compare(const Eigen::VectorXd& mu, const CholFactor& T,
                                const ReferenceSamples& ref,
                                const CompareOptions& opt) {
  const int d = T.dim();
  if (mu.size() != d || ref.dim() != d)
    throw std::invalid_argument("compare: dimension mismatch between fit ("
                                + std::to_string(d) + ") and reference ("
                                + std::to_string(ref.dim()) + ")");
  if (opt.m < 2 || opt.replicates < 1)
    throw std::invalid_argument("compare: need m >= 2 and replicates >= 1");
  if (ref.size() < opt.m)
    throw std::invalid_argument("compare: reference has "
                                + std::to_string(ref.size())
                                + " draws, fewer than m = "
                                + std::to_string(opt.m));
  ComparisonReport rep;
  rep.names = ref.names;
  rep.m = opt.m;
  rep.seed = opt.seed;
  rep.provenance = ref.provenance;
  rep.reference = marginal_stats(ref.draws);
  const Eigen::VectorXd sd_q = marginal_sd(T);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.mean_error.resize(d);
  rep.mode_error.resize(d);
  rep.sd_ratio.resize(d);
  rep.degenerate.assign(d, false);
  for (int j = 0; j < d; ++j) {
    const double s = rep.reference.sd(j);
    if (!(s > 0)) {
      rep.degenerate[j] = true;
      rep.mean_error(j) = rep.mode_error(j) = rep.sd_ratio(j) = nan;
      continue;
    }
    rep.mean_error(j) = std::abs(mu(j) - rep.reference.mean(j)) / s;
    rep.mode_error(j) = std::abs(mu(j) - rep.reference.mode(j)) / s;
    rep.sd_ratio(j) = sd_q(j) / s;
  }

  auto draw = [&](int r) {
    std::mt19937_64 rng = replicate_rng(opt.seed, r);
    Eigen::MatrixXd X = sample_gaussian_rows(mu, T, opt.m, rng);
    Eigen::MatrixXd Y = subsample_rows(ref.draws, opt.m, rng);
    return std::pair{std::move(X), std::move(Y)};
  };
  {
    const auto [X, Y] = draw(0);
    rep.bandwidth = median_heuristic(X, Y);
    if (!(rep.bandwidth > 0))
      rep.bandwidth = 1.0;
  }
  rep.mstar.assign(opt.replicates, nan);
  const int workers = std::max(
      1, std::min(opt.replicates,
                  opt.threads > 0
                      ? opt.threads
                      : static_cast<int>(std::thread::hardware_concurrency())));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int r = w; r < opt.replicates; r += workers) {
        const auto [X, Y] = draw(r);
        rep.mstar[r] = mmd_mstar(X, Y, rep.bandwidth);
      }
    });
  for (auto& t : pool)
    t.join();

  const double n = opt.replicates;
  rep.mstar_mean = std::accumulate(rep.mstar.begin(), rep.mstar.end(), 0.0) / n;
  double ss = 0;
  for (double v : rep.mstar)
    ss += (v - rep.mstar_mean) * (v - rep.mstar_mean);
  rep.mstar_sd = opt.replicates > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return rep;
}

}  // namespace wfvi

#endif
