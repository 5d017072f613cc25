#ifndef WFVI_TARGETS_GLMM_HPP
#define WFVI_TARGETS_GLMM_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/core/numerics.hpp>
#include <wfvi/core/sparsity_pattern.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wfvi {

enum class GlmmFamily { bernoulli_logit, poisson_log };

struct GlmmSubject {
  Eigen::MatrixXd X;  ///< n_i x p fixed-effect covariates
  Eigen::MatrixXd Z;  ///< n_i x r random-effect covariates
  Eigen::VectorXd y;  ///< n_i responses
};

/**
 * Generalized linear mixed model with canonical link.
 *
 * η_ij = X_ijᵀβ + Z_ijᵀb_i, b_i ~ N(0, G⁻¹) with G = WWᵀ, W lower triangular
 * and W* its log-diagonal version; ζ = vech(W*). Priors β ~ N(0, σ_β² I),
 * ζ ~ N(0, σ_ζ² I). The parameter layout is θ = (b_1, ..., b_n, β, ζ).
 *
 * log h keeps every normalizing constant: the Poisson log y! terms, the
 * (2π)^{-r/2} factor of each random effect and the prior normalizers.
 */
class GlmmModel {
 public:
  GlmmModel(GlmmFamily family, std::vector<GlmmSubject> subjects,
            double sigma_beta_sq = 100.0, double sigma_zeta_sq = 100.0)
      : family_(family),
        subjects_(std::move(subjects)),
        sigma_beta_sq_(sigma_beta_sq),
        sigma_zeta_sq_(sigma_zeta_sq) {
    if (subjects_.empty())
      throw std::invalid_argument("GlmmModel: no subjects");
    p_ = static_cast<int>(subjects_[0].X.cols());
    r_ = static_cast<int>(subjects_[0].Z.cols());
    if (r_ < 1)
      throw std::invalid_argument("GlmmModel: need at least one random effect");
    for (const auto& s : subjects_) {
      if (s.X.cols() != p_ || s.Z.cols() != r_ || s.X.rows() != s.y.size()
          || s.Z.rows() != s.y.size())
        throw std::invalid_argument("GlmmModel: inconsistent subject shapes");
      for (Eigen::Index j = 0; j < s.y.size(); ++j) {
        const double y = s.y(j);
        const bool ok = family_ == GlmmFamily::bernoulli_logit
                            ? (y == 0.0 || y == 1.0)
                            : (y >= 0.0 && y == std::floor(y));
        if (!ok)
          throw std::invalid_argument("GlmmModel: response outside family support");
      }
    }
    if (!(sigma_beta_sq_ > 0) || !(sigma_zeta_sq_ > 0))
      throw std::invalid_argument("GlmmModel: prior variances must be > 0");
    for (int l = 0; l < r_; ++l)
      for (int k = l; k < r_; ++k)
        vech_.emplace_back(k, l);
    for (const auto& s : subjects_)
      for (Eigen::Index j = 0; j < s.y.size(); ++j)
        if (family_ == GlmmFamily::poisson_log)
          log_y_factorial_ += std::lgamma(s.y(j) + 1.0);
  }

  int n_subjects() const { return static_cast<int>(subjects_.size()); }
  int p() const { return p_; }
  int r() const { return r_; }
  int q() const { return r_ * (r_ + 1) / 2; }
  int dim() const { return n_subjects() * r_ + p_ + q(); }
  GlmmFamily family() const { return family_; }
  const std::vector<GlmmSubject>& subjects() const { return subjects_; }
  int beta_offset() const { return n_subjects() * r_; }
  int zeta_offset() const { return beta_offset() + p_; }

  SparsityPattern sparsity_hint() const {
    return SparsityPattern::block_banded(n_subjects(),
                                         std::vector<int>(n_subjects(), r_),
                                         p_ + q(), 0);
  }

  /// W from ζ = vech(W*).
  Eigen::MatrixXd W_from_zeta(const Eigen::VectorXd& zeta) const {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(r_, r_);
    for (int a = 0; a < q(); ++a) {
      const auto [k, l] = vech_[a];
      W(k, l) = k == l ? std::exp(zeta(a)) : zeta(a);
    }
    return W;
  }

  double log_h(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    const int n = n_subjects();
    const Eigen::VectorXd beta = theta.segment(beta_offset(), p_);
    const Eigen::VectorXd zeta = theta.segment(zeta_offset(), q());
    const Eigen::MatrixXd W = W_from_zeta(zeta);
    double lik = -log_y_factorial_;
    double re = 0;
    for (int i = 0; i < n; ++i) {
      const auto& s = subjects_[i];
      const Eigen::VectorXd b = theta.segment(i * r_, r_);
      const Eigen::VectorXd eta = s.X * beta + s.Z * b;
      for (Eigen::Index j = 0; j < eta.size(); ++j)
        lik += s.y(j) * eta(j) - A(eta(j));
      re -= 0.5 * (W.transpose() * b).squaredNorm();
    }
    check_finite(lik, "GLMM likelihood");
    double log_det_W = 0;
    for (int k = 0; k < r_; ++k)
      log_det_W += zeta(vech_index(k, k));
    re += n * log_det_W - 0.5 * n * r_ * std::log(2.0 * std::numbers::pi);
    check_finite(re, "GLMM random-effect density");
    const double prior
        = -beta.squaredNorm() / (2.0 * sigma_beta_sq_)
          - 0.5 * p_ * std::log(2.0 * std::numbers::pi * sigma_beta_sq_)
          - zeta.squaredNorm() / (2.0 * sigma_zeta_sq_)
          - 0.5 * q() * std::log(2.0 * std::numbers::pi * sigma_zeta_sq_);
    return check_finite(lik + re + prior, "GLMM prior");
  }

  Eigen::VectorXd grad_log_h(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    const int n = n_subjects();
    const Eigen::VectorXd beta = theta.segment(beta_offset(), p_);
    const Eigen::VectorXd zeta = theta.segment(zeta_offset(), q());
    const Eigen::MatrixXd W = W_from_zeta(zeta);
    const Eigen::MatrixXd G = W * W.transpose();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    Eigen::MatrixXd Sb = Eigen::MatrixXd::Zero(r_, r_);
    for (int i = 0; i < n; ++i) {
      const auto& s = subjects_[i];
      const Eigen::VectorXd b = theta.segment(i * r_, r_);
      const Eigen::VectorXd resid = s.y - (s.X * beta + s.Z * b).unaryExpr(
                                              [this](double e) { return dA(e); });
      g.segment(i * r_, r_) = s.Z.transpose() * resid - G * b;
      g.segment(beta_offset(), p_) += s.X.transpose() * resid;
      Sb += b * b.transpose();
    }
    g.segment(beta_offset(), p_) -= beta / sigma_beta_sq_;
    const Eigen::MatrixXd Wt = Sb * W;
    for (int a = 0; a < q(); ++a) {
      const auto [k, l] = vech_[a];
      const double D = k == l ? W(k, k) : 1.0;
      g(zeta_offset() + a) = -D * Wt(k, l) + (k == l ? n : 0)
                             - zeta(a) / sigma_zeta_sq_;
    }
    return check_finite(g, "GLMM gradient");
  }

  SparseMatrix hess_log_h(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    const int n = n_subjects();
    const int bo = beta_offset();
    const int zo = zeta_offset();
    const Eigen::VectorXd beta = theta.segment(bo, p_);
    const Eigen::VectorXd zeta = theta.segment(zo, q());
    const Eigen::MatrixXd W = W_from_zeta(zeta);
    const Eigen::MatrixXd G = W * W.transpose();
    std::vector<Eigen::Triplet<double>> trip;
    auto put_sym = [&trip](int i, int j, double v) {
      trip.emplace_back(i, j, v);
      if (i != j)
        trip.emplace_back(j, i, v);
    };
    Eigen::MatrixXd Hbb = Eigen::MatrixXd::Zero(p_, p_);
    Eigen::MatrixXd Sb = Eigen::MatrixXd::Zero(r_, r_);
    for (int i = 0; i < n; ++i) {
      const auto& s = subjects_[i];
      const int o = i * r_;
      const Eigen::VectorXd b = theta.segment(o, r_);
      const Eigen::VectorXd w = (s.X * beta + s.Z * b).unaryExpr(
          [this](double e) { return d2A(e); });
      const Eigen::MatrixXd Hb = -(s.Z.transpose() * w.asDiagonal() * s.Z) - G;
      for (int c = 0; c < r_; ++c)
        for (int rr = c; rr < r_; ++rr)
          put_sym(o + rr, o + c, Hb(rr, c));
      const Eigen::MatrixXd Hxb = -(s.X.transpose() * w.asDiagonal() * s.Z);
      for (int a = 0; a < p_; ++a)
        for (int c = 0; c < r_; ++c)
          put_sym(bo + a, o + c, Hxb(a, c));
      Hbb -= s.X.transpose() * w.asDiagonal() * s.X;
      // ζ_(k,l) against b_{i,s}: -D (δ_ks (Wᵀb)_l + b_k W_sl)
      const Eigen::VectorXd Wtb = W.transpose() * b;
      for (int a = 0; a < q(); ++a) {
        const auto [k, l] = vech_[a];
        const double D = k == l ? W(k, k) : 1.0;
        for (int c = 0; c < r_; ++c) {
          const double v = -D * ((k == c ? Wtb(l) : 0.0) + b(k) * W(c, l));
          put_sym(zo + a, o + c, v);
        }
      }
      Sb += b * b.transpose();
    }
    Hbb.diagonal().array() -= 1.0 / sigma_beta_sq_;
    for (int c = 0; c < p_; ++c)
      for (int rr = c; rr < p_; ++rr)
        put_sym(bo + rr, bo + c, Hbb(rr, c));
    const Eigen::MatrixXd Wt = Sb * W;
    for (int a = 0; a < q(); ++a) {
      const auto [k, l] = vech_[a];
      const double Da = k == l ? W(k, k) : 1.0;
      for (int c = 0; c <= a; ++c) {
        const auto [m, o] = vech_[c];
        const double Dc = m == o ? W(m, m) : 1.0;
        double v = l == o ? -Da * Dc * Sb(k, m) : 0.0;
        if (a == c) {
          if (k == l)
            v -= W(k, k) * Wt(k, k);
          v -= 1.0 / sigma_zeta_sq_;
        }
        put_sym(zo + a, zo + c, v);
      }
    }
    SparseMatrix H(dim(), dim());
    H.setFromTriplets(trip.begin(), trip.end());
    for (int k = 0; k < H.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(H, k); it; ++it)
        if (!std::isfinite(it.value()))
          throw NonFiniteError("GLMM Hessian");
    return H;
  }

 private:
  void check_dim(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim())
      throw std::invalid_argument("GlmmModel: parameter length mismatch");
  }
  int vech_index(int k, int l) const {
    // column-major lower triangle: columns 0..l-1 hold r, r-1, ... entries
    return l * r_ - l * (l - 1) / 2 + (k - l);
  }
  double A(double x) const {
    return family_ == GlmmFamily::bernoulli_logit ? softplus(x) : std::exp(x);
  }
  double dA(double x) const {
    return family_ == GlmmFamily::bernoulli_logit ? sigmoid(x) : std::exp(x);
  }
  double d2A(double x) const {
    if (family_ == GlmmFamily::bernoulli_logit) {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    return std::exp(x);
  }

  GlmmFamily family_;
  std::vector<GlmmSubject> subjects_;
  double sigma_beta_sq_;
  double sigma_zeta_sq_;
  int p_ = 0;
  int r_ = 0;
  std::vector<std::pair<int, int>> vech_;
  double log_y_factorial_ = 0;
};

}  // namespace wfvi

#endif
