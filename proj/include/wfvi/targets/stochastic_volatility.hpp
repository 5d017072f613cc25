#ifndef WFVI_TARGETS_STOCHASTIC_VOLATILITY_HPP
#define WFVI_TARGETS_STOCHASTIC_VOLATILITY_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/core/numerics.hpp>
#include <wfvi/core/sparsity_pattern.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace wfvi {

/**
 * Stochastic volatility model
 *   y_t ~ N(0, exp(λ + σ b_t)), b_t = φ b_{t-1} + η_t, η_t ~ N(0, 1),
 *   b_1 ~ N(0, 1 / (1 - φ²)),
 * with σ = e^α, φ = 1 / (1 + e^{-ψ}) and N(0, σ₀²) priors on α, λ, ψ.
 * Parameter layout θ = (b_1, ..., b_n, α, λ, ψ). log h keeps all Gaussian
 * normalizing constants.
 */
class SvModel {
 public:
  explicit SvModel(Eigen::VectorXd y, double sigma0_sq = 10.0)
      : y_(std::move(y)), sigma0_sq_(sigma0_sq) {
    if (y_.size() < 1)
      throw std::invalid_argument("SvModel: empty series");
    if (!(sigma0_sq_ > 0))
      throw std::invalid_argument("SvModel: prior variance must be > 0");
  }

  int n() const { return static_cast<int>(y_.size()); }
  int dim() const { return n() + 3; }
  const Eigen::VectorXd& y() const { return y_; }

  SparsityPattern sparsity_hint() const {
    return SparsityPattern::block_banded(n(), std::vector<int>(n(), 1), 3,
                                         std::min(1, n() - 1));
  }

  double log_h(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    const int n = this->n();
    const double alpha = theta(n), lambda = theta(n + 1), psi = theta(n + 2);
    const double sigma = std::exp(alpha);
    const double phi = sigmoid(psi);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    double obs = 0;
    for (int t = 0; t < n; ++t) {
      const double b = theta(t);
      obs += -0.5 * log2pi - 0.5 * (lambda + sigma * b)
             - 0.5 * y_(t) * y_(t) * std::exp(-lambda - sigma * b);
    }
    check_finite(obs, "SV observation density");
    const double one_m_phi2 = (1.0 - phi) * (1.0 + phi);
    double state = -0.5 * log2pi + 0.5 * std::log(one_m_phi2)
                   - 0.5 * one_m_phi2 * theta(0) * theta(0);
    for (int t = 1; t < n; ++t) {
      const double e = theta(t) - phi * theta(t - 1);
      state += -0.5 * log2pi - 0.5 * e * e;
    }
    check_finite(state, "SV state density");
    const double prior = -(alpha * alpha + lambda * lambda + psi * psi)
                             / (2.0 * sigma0_sq_)
                         - 1.5 * std::log(2.0 * std::numbers::pi * sigma0_sq_);
    return check_finite(obs + state + prior, "SV prior");
  }

  Eigen::VectorXd grad_log_h(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    const int n = this->n();
    const double alpha = theta(n), lambda = theta(n + 1), psi = theta(n + 2);
    const double sigma = std::exp(alpha);
    const double phi = sigmoid(psi);
    const double dphi = phi * (1.0 - phi);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    double g_alpha = 0, g_lambda = 0;
    for (int t = 0; t < n; ++t) {
      const double b = theta(t);
      const double e = half_scaled_sq(t, lambda, sigma * b);
      g(t) = -0.5 * sigma + sigma * e;
      g_alpha += sigma * b * (e - 0.5);
      g_lambda += e - 0.5;
    }
    g(0) += -(1.0 - phi * phi) * theta(0);
    for (int t = 1; t < n; ++t) {
      const double e = theta(t) - phi * theta(t - 1);
      g(t) -= e;
      g(t - 1) += phi * e;
    }
    g(n) = g_alpha - alpha / sigma0_sq_;
    g(n + 1) = g_lambda - lambda / sigma0_sq_;
    g(n + 2) = dlogh_dphi(theta, phi) * dphi - psi / sigma0_sq_;
    return check_finite(g, "SV gradient");
  }

  SparseMatrix hess_log_h(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    const int n = this->n();
    const int ia = n, il = n + 1, ip = n + 2;
    const double alpha = theta(ia), lambda = theta(il);
    const double sigma = std::exp(alpha);
    const double phi = sigmoid(theta(ip));
    const double dphi = phi * (1.0 - phi);
    const double d2phi = dphi * (1.0 - 2.0 * phi);
    std::vector<Eigen::Triplet<double>> trip;
    auto put_sym = [&trip](int i, int j, double v) {
      trip.emplace_back(i, j, v);
      if (i != j)
        trip.emplace_back(j, i, v);
    };
    double h_aa = 0, h_al = 0, h_ll = 0;
    for (int t = 0; t < n; ++t) {
      const double b = theta(t);
      const double e = half_scaled_sq(t, lambda, sigma * b);
      double diag = -sigma * sigma * e;
      if (t == 0)
        diag -= 1.0 - phi * phi;
      else
        diag -= 1.0;
      if (t < n - 1)
        diag -= phi * phi;
      put_sym(t, t, diag);
      if (t < n - 1)
        put_sym(t + 1, t, phi);
      put_sym(ia, t, -0.5 * sigma + sigma * e * (1.0 - sigma * b));
      put_sym(il, t, -sigma * e);
      double dstate_dphi;
      if (n == 1)
        dstate_dphi = 2.0 * phi * theta(0);
      else if (t == 0)
        dstate_dphi = theta(1);
      else if (t == n - 1)
        dstate_dphi = theta(t - 1);
      else
        dstate_dphi = theta(t - 1) + theta(t + 1) - 2.0 * phi * theta(t);
      put_sym(ip, t, dstate_dphi * dphi);
      h_aa += sigma * b * (e - 0.5 - sigma * b * e);
      h_al -= sigma * b * e;
      h_ll -= e;
    }
    put_sym(ia, ia, h_aa - 1.0 / sigma0_sq_);
    put_sym(il, ia, h_al);
    put_sym(il, il, h_ll - 1.0 / sigma0_sq_);
    double d2 = -(1.0 + phi * phi) / std::pow(1.0 - phi * phi, 2)
                + theta(0) * theta(0);
    for (int t = 1; t < n; ++t)
      d2 -= theta(t - 1) * theta(t - 1);
    put_sym(ip, ip, d2 * dphi * dphi + dlogh_dphi(theta, phi) * d2phi
                        - 1.0 / sigma0_sq_);
    SparseMatrix H(dim(), dim());
    H.setFromTriplets(trip.begin(), trip.end());
    for (int k = 0; k < H.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(H, k); it; ++it)
        if (!std::isfinite(it.value()))
          throw NonFiniteError("SV Hessian");
    return H;
  }

 private:
  void check_dim(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim())
      throw std::invalid_argument("SvModel: parameter length mismatch");
  }
  // y_t² exp(-λ - σ b_t) / 2
  double half_scaled_sq(int t, double lambda, double sb) const {
    return 0.5 * y_(t) * y_(t) * std::exp(-lambda - sb);
  }
  // ∂ log h / ∂φ of the state terms
  double dlogh_dphi(const Eigen::VectorXd& theta, double phi) const {
    double f = -phi / (1.0 - phi * phi) + phi * theta(0) * theta(0);
    for (int t = 1; t < n(); ++t)
      f += (theta(t) - phi * theta(t - 1)) * theta(t - 1);
    return f;
  }

  Eigen::VectorXd y_;
  double sigma0_sq_;
};

}  // namespace wfvi

#endif
