#ifndef WFVI_ANALYTICS_RECURSION_HPP
#define WFVI_ANALYTICS_RECURSION_HPP

#include <wfvi/core/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wfvi {

/// State of the normalized infinite-batch SD recursion.
struct RecursionState {
  Eigen::MatrixXd J;
  Eigen::VectorXd eps;
  double beta = 0.9;
  int t = 0;
};

/**
 * One step of
 *   J' = βJ + (1−β)(J⁻¹ + εεᵀ),  ε' = (I − (1−β)J'⁻¹)ε.
 *
 * @throw std::domain_error if J' is not positive definite
 */
inline RecursionState recursion_step(const RecursionState& s) {
  const Eigen::Index d = s.J.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(s.J);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("recursion: J lost positive definiteness");
  RecursionState n;
  n.beta = s.beta;
  n.t = s.t + 1;
  n.J = s.beta * s.J
        + (1.0 - s.beta) * (llt.solve(I) + s.eps * s.eps.transpose());
  n.J = 0.5 * (n.J + n.J.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt_next(n.J);
  if (llt_next.info() != Eigen::Success)
    throw std::domain_error("recursion: J lost positive definiteness");
  n.eps = s.eps - (1.0 - s.beta) * llt_next.solve(s.eps);
  return n;
}

struct RecursionTrace {
  std::vector<double> eps_norm;    ///< ‖ε_t‖, t = 0..t_max
  std::vector<double> delta_norm;  ///< ‖Δ_t‖ (spectral), t = 0..t_max
  std::vector<double> eps_bound;   ///< δ^t ‖ε₀‖
  std::vector<double> delta_bound; ///< analytic bound for t >= 2, NaN before
  double xi = 0;
  double delta = 0;
  bool eps_bound_ok = true;
  bool delta_bound_ok = true;
  bool sandwich_ok = true;
  bool eps_monotone = true;
  RecursionState final_state;
};

inline double spectral_norm_sym(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/**
 * Runs the recursion for t_max steps from (J0, ε0) with constant β ∈ (½, 1)
 * and checks, at every step, the sandwich K ⪯ J ⪯ H with
 * K = βJ + (1−β)J⁻¹, H = K + (1−β)‖ε‖²I, the geometric bound
 * ‖ε_t‖ ≤ δ^t‖ε₀‖ and the bound
 *   ‖Δ_{t+1}‖ ≤ β^t‖Δ₁‖ + (1−β)‖ε₀‖² Σ_{j<t} β^j δ^{2(t−j)},
 * where δ = 1 − (1−β)ξ, ξ = min{τ_min(J₁⁻¹), 1/ε̃₀} and
 * ε̃₀ = (‖ε₀‖² + sqrt(‖ε₀‖⁴ + 4)) / 2.
 */
inline RecursionTrace natural_recursion_trace(const Eigen::MatrixXd& J0,
                                     const Eigen::VectorXd& eps0, double beta,
                                     int t_max, double tol = 1e-10) {
  if (!(beta > 0.5 && beta < 1.0))
    throw std::invalid_argument("natural_recursion_trace: beta must lie in (1/2, 1)");
  if (J0.rows() != J0.cols() || J0.rows() != eps0.size())
    throw std::invalid_argument("natural_recursion_trace: dimension mismatch");
  const Eigen::Index d = J0.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  RecursionTrace tr;
  RecursionState s{J0, eps0, beta, 0};
  tr.eps_norm.push_back(eps0.norm());
  tr.delta_norm.push_back(spectral_norm_sym(J0 - I));
  std::vector<RecursionState> states{s};
  for (int t = 0; t < t_max; ++t) {
    RecursionState next = recursion_step(s);
    const Eigen::MatrixXd Jinv = s.J.llt().solve(I);
    const Eigen::MatrixXd K = beta * s.J + (1.0 - beta) * Jinv;
    const Eigen::MatrixXd H = K + (1.0 - beta) * s.eps.squaredNorm() * I;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lo(next.J - K,
                                                      Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hi(H - next.J,
                                                      Eigen::EigenvaluesOnly);
    const double scale = 1.0 + spectral_norm_sym(H);
    if (lo.eigenvalues().minCoeff() < -tol * scale
        || hi.eigenvalues().minCoeff() < -tol * scale)
      tr.sandwich_ok = false;
    if (next.eps.norm() > s.eps.norm() * (1.0 + tol) + tol * 1e-6)
      tr.eps_monotone = false;
    s = next;
    tr.eps_norm.push_back(s.eps.norm());
    tr.delta_norm.push_back(spectral_norm_sym(s.J - I));
    if (t == 0)
      states.push_back(s);
  }
  tr.final_state = s;

  const double e0 = eps0.norm();
  const double e0sq = e0 * e0;
  const double eps_tilde0 = 0.5 * (e0sq + std::sqrt(e0sq * e0sq + 4.0));
  double tau_min_J1inv = 1.0;
  if (t_max >= 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(states[1].J,
                                                      Eigen::EigenvaluesOnly);
    tau_min_J1inv = 1.0 / es.eigenvalues().maxCoeff();
  }
  tr.xi = std::min(tau_min_J1inv, 1.0 / eps_tilde0);
  tr.delta = 1.0 - (1.0 - beta) * tr.xi;

  const double delta1 = tr.delta_norm.size() > 1 ? tr.delta_norm[1] : 0.0;
  // Eigenvalues of J − I carry round-off of order d·ε_mach once J ≈ I.
  const double floor = 64.0 * static_cast<double>(d)
                       * std::numeric_limits<double>::epsilon();
  for (int t = 0; t <= t_max; ++t) {
    const double eb = std::pow(tr.delta, t) * e0;
    tr.eps_bound.push_back(eb);
    if (tr.eps_norm[t] > eb * (1.0 + tol) + floor)
      tr.eps_bound_ok = false;
    if (t >= 2) {
      // bound on ‖Δ_{k+1}‖ with k = t − 1 ≥ 1
      const int k = t - 1;
      double sum = 0;
      for (int j = 0; j < k; ++j)
        sum += std::pow(beta, j) * std::pow(tr.delta, 2.0 * (k - j));
      const double db = std::pow(beta, k) * delta1 + (1.0 - beta) * e0sq * sum;
      tr.delta_bound.push_back(db);
      if (tr.delta_norm[t] > db * (1.0 + tol) + floor)
        tr.delta_bound_ok = false;
    } else {
      tr.delta_bound.push_back(std::nan(""));
    }
  }
  return tr;
}

/// Closed form of Σ_{j<k} β^j δ^{2(k−j)} = δ²(δ^{2k} − β^k)/(δ² − β).
inline double recursion_delta_series(double beta, double delta, int k) {
  const double d2 = delta * delta;
  if (std::abs(d2 - beta) < 1e-14) {
    return k * std::pow(beta, k);
  }
  return d2 * (std::pow(d2, k) - std::pow(beta, k)) / (d2 - beta);
}

}  // namespace wfvi

#endif
