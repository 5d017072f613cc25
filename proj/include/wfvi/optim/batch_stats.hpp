#ifndef WFVI_OPTIM_BATCH_STATS_HPP
#define WFVI_OPTIM_BATCH_STATS_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace wfvi {

/**
 * Summary statistics of a batch {θ_i, g_h(θ_i)}: means θ̄, ḡ and the
 * 1/B-normalized (cross-)covariances C_θ, C_g, C_θg.
 */
struct BatchStats {
  Eigen::VectorXd theta_bar;
  Eigen::VectorXd g_bar;
  Eigen::MatrixXd C_theta;
  Eigen::MatrixXd C_g;
  Eigen::MatrixXd C_thetag;
  long long B = 0;

  /// Columns of thetas and grads are samples.
  static BatchStats from_samples(const Eigen::MatrixXd& thetas,
                                 const Eigen::MatrixXd& grads) {
    if (thetas.rows() != grads.rows() || thetas.cols() != grads.cols())
      throw std::invalid_argument("BatchStats: shape mismatch");
    if (thetas.cols() < 1)
      throw std::invalid_argument("BatchStats: empty batch");
    BatchStats s;
    s.B = thetas.cols();
    const double inv_b = 1.0 / static_cast<double>(s.B);
    s.theta_bar = thetas.rowwise().mean();
    s.g_bar = grads.rowwise().mean();
    const Eigen::MatrixXd Xc = thetas.colwise() - s.theta_bar;
    const Eigen::MatrixXd Gc = grads.colwise() - s.g_bar;
    s.C_theta = Xc * Xc.transpose() * inv_b;
    s.C_g = Gc * Gc.transpose() * inv_b;
    s.C_thetag = Xc * Gc.transpose() * inv_b;
    return s;
  }

  Eigen::MatrixXd U(const Eigen::VectorXd& mu) const {
    const Eigen::VectorXd r = mu - theta_bar;
    return C_theta + r * r.transpose();
  }
  Eigen::MatrixXd V() const { return C_g + g_bar * g_bar.transpose(); }
  Eigen::MatrixXd W(const Eigen::VectorXd& mu) const {
    return C_thetag - (mu - theta_bar) * g_bar.transpose();
  }

  /// Batch score-based divergence tr(VΣ) + tr(UΣ⁻¹) + 2 tr(W).
  double sd_objective(const Eigen::VectorXd& mu,
                      const Eigen::MatrixXd& Sigma) const {
    const Eigen::MatrixXd Sinv = Sigma.llt().solve(
        Eigen::MatrixXd::Identity(Sigma.rows(), Sigma.cols()));
    return (V() * Sigma).trace() + (U(mu) * Sinv).trace() + 2.0 * W(mu).trace();
  }

  /// Batch Fisher divergence tr(V) + tr(UΣ⁻²) + 2 tr(WΣ⁻¹).
  double fd_objective(const Eigen::VectorXd& mu,
                      const Eigen::MatrixXd& Sigma) const {
    const Eigen::MatrixXd Sinv = Sigma.llt().solve(
        Eigen::MatrixXd::Identity(Sigma.rows(), Sigma.cols()));
    return V().trace() + (U(mu) * Sinv * Sinv).trace()
           + 2.0 * (W(mu) * Sinv).trace();
  }
};

/**
 * Streams samples into BatchStats without storing them. Sums are
 * accumulated relative to the first sample for numerical stability.
 */
class BatchStatsAccumulator {
 public:
  explicit BatchStatsAccumulator(int d)
      : d_(d),
        sx_(Eigen::VectorXd::Zero(d)),
        sg_(Eigen::VectorXd::Zero(d)),
        sxx_(Eigen::MatrixXd::Zero(d, d)),
        sgg_(Eigen::MatrixXd::Zero(d, d)),
        sxg_(Eigen::MatrixXd::Zero(d, d)) {}

  /// Adds a block of samples stored as columns.
  void add(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& grads) {
    if (thetas.rows() != d_ || grads.rows() != d_
        || thetas.cols() != grads.cols())
      throw std::invalid_argument("BatchStatsAccumulator: shape mismatch");
    if (thetas.cols() == 0)
      return;
    if (n_ == 0) {
      x0_ = thetas.col(0);
      g0_ = grads.col(0);
    }
    const Eigen::MatrixXd X = thetas.colwise() - x0_;
    const Eigen::MatrixXd G = grads.colwise() - g0_;
    sx_ += X.rowwise().sum();
    sg_ += G.rowwise().sum();
    sxx_.noalias() += X * X.transpose();
    sgg_.noalias() += G * G.transpose();
    sxg_.noalias() += X * G.transpose();
    n_ += thetas.cols();
  }

  BatchStats finish() const {
    if (n_ == 0)
      throw std::invalid_argument("BatchStatsAccumulator: no samples");
    BatchStats s;
    s.B = n_;
    const double inv = 1.0 / static_cast<double>(n_);
    const Eigen::VectorXd mx = sx_ * inv;
    const Eigen::VectorXd mg = sg_ * inv;
    s.theta_bar = x0_ + mx;
    s.g_bar = g0_ + mg;
    s.C_theta = sxx_ * inv - mx * mx.transpose();
    s.C_g = sgg_ * inv - mg * mg.transpose();
    s.C_thetag = sxg_ * inv - mx * mg.transpose();
    return s;
  }

 private:
  int d_;
  long long n_ = 0;
  Eigen::VectorXd x0_, g0_;
  Eigen::VectorXd sx_, sg_;
  Eigen::MatrixXd sxx_, sgg_, sxg_;
};

}  // namespace wfvi

#endif
