#ifndef WFVI_DIAGNOSTICS_MMD_HPP
#define WFVI_DIAGNOSTICS_MMD_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wfvi {

inline constexpr double kMstarOffset = 1e-5;

namespace detail {
// Pairwise squared distances between the rows of A and B.
inline Eigen::MatrixXd sq_dists(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B) {
  const Eigen::VectorXd na = A.rowwise().squaredNorm();
  const Eigen::VectorXd nb = B.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * A * B.transpose();
  D.colwise() += na;
  D.rowwise() += nb.transpose();
  return D.cwiseMax(0.0);
}
}  // namespace detail

/**
 * Unbiased MMD² between equally sized samples (rows) with the RBF kernel
 * k(x, y) = exp(-‖x - y‖² / (2h²)):
 *   1/(m(m-1)) Σ_{i≠j} [k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i)].
 */
inline double mmd2_unbiased(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                            double h) {
  const Eigen::Index m = X.rows();
  if (Y.rows() != m || Y.cols() != X.cols())
    throw std::invalid_argument("mmd: samples must have equal shape");
  if (m < 2)
    throw std::invalid_argument("mmd: need at least two draws per sample");
  if (!(h > 0))
    throw std::invalid_argument("mmd: bandwidth must be positive");
  const double c = -0.5 / (h * h);
  auto off_diag_sum = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd K = (c * detail::sq_dists(A, B)).array().exp();
    return K.sum() - K.diagonal().sum();
  };
  // Σ_{i≠j} k(x_i,y_j) and Σ_{i≠j} k(x_j,y_i) are the same sum.
  const double s = off_diag_sum(X, X) + off_diag_sum(Y, Y)
                   - 2.0 * off_diag_sum(X, Y);
  return s / (static_cast<double>(m) * static_cast<double>(m - 1));
}

/**
 * M* = -log(MMD²_u + 1e-5). The unbiased estimate can be negative when the
 * two samples come from nearly the same law; it is clamped at zero, so M*
 * never exceeds -log(1e-5).
 */
inline double mstar(double mmd2) {
  return -std::log(std::max(mmd2, 0.0) + kMstarOffset);
}

inline double mmd_mstar(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                        double h) {
  return mstar(mmd2_unbiased(X, Y, h));
}

/// Median of the pairwise distances within the pooled rows of X and Y.
inline double median_heuristic(const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& Y) {
  Eigen::MatrixXd Z(X.rows() + Y.rows(), X.cols());
  Z << X, Y;
  const Eigen::MatrixXd D = detail::sq_dists(Z, Z);
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(Z.rows() * (Z.rows() - 1) / 2));
  for (Eigen::Index j = 0; j < Z.rows(); ++j)
    for (Eigen::Index i = j + 1; i < Z.rows(); ++i)
      v.push_back(D(i, j));
  if (v.empty())
    throw std::invalid_argument("median_heuristic: need two points");
  const std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  double med = v[k];
  if (v.size() % 2 == 0)
    med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + k));
  return std::sqrt(med);
}

}  // namespace wfvi

#endif
