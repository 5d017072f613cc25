#ifndef WFVI_ANALYTICS_MEANFIELD_HPP
#define WFVI_ANALYTICS_MEANFIELD_HPP

#include <wfvi/analytics/weighted_fisher.hpp>
#include <wfvi/core/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace wfvi {

enum class MeanFieldDivergence { KL, FD, SD, weighted };

enum class KktCase { active, inactive, not_applicable };

struct MeanFieldSolution {
  Eigen::VectorXd sigma_diag;
  Eigen::VectorXd mu;
  std::vector<KktCase> kkt_cases;
  MeanFieldDivergence divergence = MeanFieldDivergence::KL;
  /// NQP solution s (SD only).
  Eigen::VectorXd s;
  /// Largest KKT violation (SD only).
  double kkt_residual = 0;
  int iterations = 0;
};

namespace detail {
inline Eigen::VectorXd mean_or_zero(const Eigen::VectorXd& nu, Eigen::Index d) {
  if (nu.size() == 0)
    return Eigen::VectorXd::Zero(d);
  if (nu.size() != d)
    throw std::invalid_argument("mean length does not match precision");
  return nu;
}
}  // namespace detail

/// Mean-field KL optimum: Σ_ii = 1 / Λ_ii, μ = ν.
inline MeanFieldSolution meanfield_kl(const Eigen::MatrixXd& Lambda,
                                      const Eigen::VectorXd& nu = {}) {
  detail::require_spd(Lambda, "Lambda");
  MeanFieldSolution sol;
  sol.divergence = MeanFieldDivergence::KL;
  sol.sigma_diag = Lambda.diagonal().cwiseInverse();
  sol.mu = detail::mean_or_zero(nu, Lambda.rows());
  sol.kkt_cases.assign(Lambda.rows(), KktCase::not_applicable);
  return sol;
}

/**
 * Mean-field optimum of the M-weighted Fisher divergence for diagonal M:
 * Σ_ii = sqrt(M_ii / Σ_j M_jj Λ_ij²). M = I gives the Fisher divergence.
 */
inline MeanFieldSolution meanfield_weighted(const Eigen::MatrixXd& Lambda,
                                            const Eigen::VectorXd& M_diag,
                                            const Eigen::VectorXd& nu = {}) {
  detail::require_spd(Lambda, "Lambda");
  if (M_diag.size() != Lambda.rows())
    throw std::invalid_argument("M_diag length does not match precision");
  if ((M_diag.array() <= 0).any())
    throw std::invalid_argument("M_diag must be positive");
  MeanFieldSolution sol;
  const bool identity = (M_diag.array() == 1.0).all();
  sol.divergence = identity ? MeanFieldDivergence::FD
                            : MeanFieldDivergence::weighted;
  const Eigen::MatrixXd L2 = Lambda.cwiseAbs2();
  const Eigen::VectorXd denom = L2 * M_diag;
  sol.sigma_diag = (M_diag.array() / denom.array()).sqrt().matrix();
  sol.mu = detail::mean_or_zero(nu, Lambda.rows());
  sol.kkt_cases.assign(Lambda.rows(), KktCase::not_applicable);
  return sol;
}

struct NqpOptions {
  double kkt_tol = 1e-8;
  int max_iter = 100000;
};

/// Largest violation of the KKT conditions of min ½sᵀHs − 1ᵀs, s ≥ 0.
inline double nqp_kkt_residual(const Eigen::MatrixXd& H,
                               const Eigen::VectorXd& s) {
  const Eigen::VectorXd Hs = H * s;
  double r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < 0)
      r = std::max(r, -s(i));
    else if (s(i) > 0)
      r = std::max(r, std::abs(Hs(i) - 1.0));
    else
      r = std::max(r, 1.0 - Hs(i));
  }
  return r;
}

/**
 * Solves min ½sᵀHs − 1ᵀs subject to s ≥ 0 for SPD H by cyclic projected
 * coordinate descent, polishing the free set with an exact solve.
 *
 * @throw ConvergenceError if the KKT residual stays above tolerance
 */
inline Eigen::VectorXd solve_nqp(const Eigen::MatrixXd& H, int* iterations,
                                 const NqpOptions& opt = {}) {
  const Eigen::Index d = H.rows();
  Eigen::VectorXd s = Eigen::VectorXd::Ones(d);
  Eigen::VectorXd Hs = H * s;
  auto polish = [&H, d](const Eigen::VectorXd& s0, Eigen::VectorXd& out) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < d; ++i)
      if (s0(i) > 0)
        free.push_back(i);
    if (free.empty())
      return false;
    Eigen::MatrixXd Hf(free.size(), free.size());
    for (std::size_t a = 0; a < free.size(); ++a)
      for (std::size_t b = 0; b < free.size(); ++b)
        Hf(a, b) = H(free[a], free[b]);
    const Eigen::VectorXd sf
        = Hf.llt().solve(Eigen::VectorXd::Ones(free.size()));
    if ((sf.array() <= 0).any())
      return false;
    out = Eigen::VectorXd::Zero(d);
    for (std::size_t a = 0; a < free.size(); ++a)
      out(free[a]) = sf(a);
    return true;
  };
  for (int it = 1; it <= opt.max_iter; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double si = std::max(0.0, s(i) + (1.0 - Hs(i)) / H(i, i));
      const double delta = si - s(i);
      if (delta != 0.0) {
        Hs += delta * H.col(i);
        s(i) = si;
      }
    }
    Eigen::VectorXd candidate;
    if (polish(s, candidate) && nqp_kkt_residual(H, candidate) < opt.kkt_tol) {
      if (iterations)
        *iterations = it;
      return candidate;
    }
    if (nqp_kkt_residual(H, s) < opt.kkt_tol) {
      if (iterations)
        *iterations = it;
      return s;
    }
  }
  throw ConvergenceError("NQP solver: KKT residual above tolerance after "
                         + std::to_string(opt.max_iter) + " iterations");
}

/**
 * Mean-field score-based divergence optimum via the non-negative quadratic
 * program with H_ij = Λ_ij² / (Λ_ii Λ_jj); Σ_ii = s_i / Λ_ii.
 */
inline MeanFieldSolution meanfield_sd_nqp(const Eigen::MatrixXd& Lambda,
                                          const Eigen::VectorXd& nu = {},
                                          const NqpOptions& opt = {}) {
  detail::require_spd(Lambda, "Lambda");
  const Eigen::Index d = Lambda.rows();
  const Eigen::VectorXd ld = Lambda.diagonal();
  Eigen::MatrixXd H(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      H(i, j) = Lambda(i, j) * Lambda(i, j) / (ld(i) * ld(j));
  MeanFieldSolution sol;
  sol.divergence = MeanFieldDivergence::SD;
  sol.s = solve_nqp(H, &sol.iterations, opt);
  sol.kkt_residual = nqp_kkt_residual(H, sol.s);
  sol.sigma_diag = sol.s.cwiseQuotient(ld);
  sol.mu = detail::mean_or_zero(nu, d);
  sol.kkt_cases.resize(d);
  for (Eigen::Index i = 0; i < d; ++i)
    sol.kkt_cases[i] = sol.s(i) > 0 ? KktCase::inactive : KktCase::active;
  return sol;
}

/// Per-coordinate outcome of the mean-field ordering checks.
struct OrderingReport {
  Eigen::VectorXd sigma_kl, sigma_m, sigma_fd, sigma_sd;
  bool m_below_kl = true;
  bool sd_below_kl = true;
  bool has_offdiagonal = false;
  /// Strict inequality in at least one coordinate for both M and SD.
  bool strict_somewhere = false;
  bool kkt_ok = true;
  /// Σ^S_ii ≤ Σ^F_ii sqrt(Σ_j Λ_ij²) / Λ_ii for every coordinate.
  bool sd_fd_bound_ok = true;
  bool diagonally_dominant = false;
  /// Σ^S_ii / Σ^F_ii ≤ √2 (only meaningful if diagonally dominant).
  bool sqrt2_bound_ok = true;

  bool passed() const {
    return m_below_kl && sd_below_kl && kkt_ok && sd_fd_bound_ok
           && (!has_offdiagonal || strict_somewhere)
           && (!diagonally_dominant || sqrt2_bound_ok);
  }
};

/**
 * Checks Σ^M_ii ≤ Σ^KL_ii and Σ^S_ii ≤ Σ^KL_ii per coordinate with the
 * given margin, strictness when Λ is not diagonal, the KKT dichotomy of the
 * SD solution, and the SD/FD ratio bounds.
 */
inline OrderingReport meanfield_ordering_check(const Eigen::MatrixXd& Lambda,
                                     const Eigen::VectorXd& M_diag,
                                     double margin = 1e-10) {
  const Eigen::Index d = Lambda.rows();
  OrderingReport rep;
  rep.sigma_kl = meanfield_kl(Lambda).sigma_diag;
  rep.sigma_m = meanfield_weighted(Lambda, M_diag).sigma_diag;
  rep.sigma_fd = meanfield_weighted(Lambda, Eigen::VectorXd::Ones(d)).sigma_diag;
  const MeanFieldSolution sd = meanfield_sd_nqp(Lambda);
  rep.sigma_sd = sd.sigma_diag;
  bool strict_m = false, strict_s = false;
  rep.diagonally_dominant = true;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (rep.sigma_m(i) > rep.sigma_kl(i) + margin)
      rep.m_below_kl = false;
    if (rep.sigma_sd(i) > rep.sigma_kl(i) + margin)
      rep.sd_below_kl = false;
    if (rep.sigma_m(i) < rep.sigma_kl(i) - margin)
      strict_m = true;
    if (rep.sigma_sd(i) < rep.sigma_kl(i) - margin)
      strict_s = true;
    double off = 0;
    for (Eigen::Index j = 0; j < d; ++j)
      if (j != i) {
        off += std::abs(Lambda(i, j));
        if (Lambda(i, j) != 0.0)
          rep.has_offdiagonal = true;
      }
    if (!(Lambda(i, i) > off))
      rep.diagonally_dominant = false;
    const double row_norm = Lambda.row(i).norm();
    if (rep.sigma_sd(i)
        > rep.sigma_fd(i) * row_norm / Lambda(i, i) * (1.0 + margin) + margin)
      rep.sd_fd_bound_ok = false;
    if (rep.sigma_sd(i) > std::sqrt(2.0) * rep.sigma_fd(i) + margin)
      rep.sqrt2_bound_ok = false;
  }
  rep.strict_somewhere = strict_m && strict_s;
  // KKT dichotomy: s_i = 0 with (Hs)_i > 1, or s_i > 0 with (Hs)_i = 1.
  Eigen::MatrixXd H(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      H(i, j) = Lambda(i, j) * Lambda(i, j) / (Lambda(i, i) * Lambda(j, j));
  const Eigen::VectorXd Hs = H * sd.s;
  for (Eigen::Index i = 0; i < d; ++i) {
    const bool a = sd.s(i) == 0.0 && Hs(i) > 1.0 - 1e-8;
    const bool b = sd.s(i) > 0.0 && std::abs(Hs(i) - 1.0) <= 1e-8;
    if (!(a || b))
      rep.kkt_ok = false;
  }
  return rep;
}

struct RegionCell {
  double a, b, c;
  /// "all", "two", "one", "none" or "indefinite".
  std::string region;
};

/**
 * Classifies the 3 x 3 precision [[1,a,b],[a,1,c],[b,c,1]] by the number of
 * coordinates with Σ^S_ii ≤ Σ^F_ii over an (a, b) grid on [-1, 1]².
 */
inline std::vector<RegionCell> region_sweep(const std::vector<double>& c_values,
                                            double step = 0.02) {
  std::vector<RegionCell> out;
  const int n = static_cast<int>(std::lround(2.0 / step));
  for (double c : c_values)
    for (int ia = 0; ia <= n; ++ia)
      for (int ib = 0; ib <= n; ++ib) {
        const double a = -1.0 + ia * step;
        const double b = -1.0 + ib * step;
        Eigen::Matrix3d L;
        L << 1, a, b, a, 1, c, b, c, 1;
        RegionCell cell{a, b, c, "indefinite"};
        Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(L)};
        if (llt.info() == Eigen::Success) {
          const Eigen::VectorXd f
              = meanfield_weighted(L, Eigen::Vector3d::Ones()).sigma_diag;
          const Eigen::VectorXd s = meanfield_sd_nqp(L).sigma_diag;
          int count = 0;
          for (int i = 0; i < 3; ++i)
            if (s(i) <= f(i) + 1e-12)
              ++count;
          static const char* names[] = {"none", "one", "two", "all"};
          cell.region = names[count];
        }
        out.push_back(cell);
      }
  return out;
}

}  // namespace wfvi

#endif
