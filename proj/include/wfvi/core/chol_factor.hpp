#ifndef WFVI_CORE_CHOL_FACTOR_HPP
#define WFVI_CORE_CHOL_FACTOR_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/core/sparsity_pattern.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace wfvi {

/// Lower bound on T*_ii so that exp(T*_ii) stays representable.
inline constexpr double kMinLogDiag = -700.0;
/// Diagonal magnitude below which a factor is treated as singular.
inline constexpr double kSingularDiag = 1e-300;

/**
 * Sparse lower-triangular factor T of a precision matrix Ω = TTᵀ.
 *
 * Stores both the entries of T and the unconstrained values T*, which equal
 * T off the diagonal and log T_ii on it. Both vectors are aligned with the
 * pattern's nonzero list.
 */
class CholFactor {
 public:
  CholFactor() = default;

  /// Identity factor on the given pattern.
  explicit CholFactor(SparsityPattern pattern)
      : pattern_(std::make_shared<const SparsityPattern>(std::move(pattern))) {
    values_ = Eigen::VectorXd::Zero(pattern_->nnz());
    star_ = Eigen::VectorXd::Zero(pattern_->nnz());
    for (int j = 0; j < pattern_->dim(); ++j)
      values_(pattern_->diag_index(j)) = 1.0;
  }

  static CholFactor from_star(SparsityPattern pattern,
                              const Eigen::VectorXd& star) {
    CholFactor f(std::move(pattern));
    f.set_star(star);
    return f;
  }

  /// @throw std::invalid_argument if a diagonal entry is not positive
  static CholFactor from_values(SparsityPattern pattern,
                                const Eigen::VectorXd& values) {
    CholFactor f(std::move(pattern));
    f.set_values(values);
    return f;
  }

  /// Factor with T = c I on the given pattern.
  static CholFactor scaled_identity(SparsityPattern pattern, double c) {
    CholFactor f(std::move(pattern));
    Eigen::VectorXd v = f.values_;
    v *= c;
    f.set_values(v);
    return f;
  }

  /// Restricts a dense lower-triangular matrix to the pattern.
  static CholFactor from_dense(SparsityPattern pattern,
                               const Eigen::MatrixXd& T) {
    CholFactor f(std::move(pattern));
    Eigen::VectorXd v(f.pattern_->nnz());
    for (int k = 0; k < v.size(); ++k)
      v(k) = T(f.pattern_->row(k), f.pattern_->col(k));
    f.set_values(v);
    return f;
  }

  const SparsityPattern& pattern() const { return *pattern_; }
  std::shared_ptr<const SparsityPattern> pattern_ptr() const {
    return pattern_;
  }
  int dim() const { return pattern_->dim(); }
  int nnz() const { return pattern_->nnz(); }

  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& star_values() const { return star_; }
  double diag(int j) const { return values_(pattern_->diag_index(j)); }

  /// Sets T*; diagonal entries are clamped to kMinLogDiag.
  void set_star(const Eigen::VectorXd& star) {
    if (star.size() != nnz())
      throw std::invalid_argument("star vector length does not match pattern");
    star_ = star;
    values_ = star;
    for (int j = 0; j < dim(); ++j) {
      const int k = pattern_->diag_index(j);
      star_(k) = std::max(star_(k), kMinLogDiag);
      values_(k) = std::exp(star_(k));
    }
  }

  void set_values(const Eigen::VectorXd& values) {
    if (values.size() != nnz())
      throw std::invalid_argument("value vector length does not match pattern");
    for (int j = 0; j < dim(); ++j)
      if (!(values(pattern_->diag_index(j)) > 0))
        throw std::invalid_argument("factor diagonal must be positive");
    values_ = values;
    star_ = values;
    for (int j = 0; j < dim(); ++j) {
      const int k = pattern_->diag_index(j);
      star_(k) = std::log(values_(k));
    }
  }

  double sum_log_diag() const {
    double s = 0;
    for (int j = 0; j < dim(); ++j)
      s += star_(pattern_->diag_index(j));
    return s;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim(), dim());
    for (int k = 0; k < nnz(); ++k)
      T(pattern_->row(k), pattern_->col(k)) = values_(k);
    return T;
  }

  /// Dense precision TTᵀ.
  Eigen::MatrixXd precision() const {
    Eigen::MatrixXd T = to_dense();
    return T * T.transpose();
  }

  /// Dense covariance T^{-ᵀ}T^{-1}.
  Eigen::MatrixXd covariance() const {
    Eigen::MatrixXd Tinv = solve_lower(Eigen::MatrixXd::Identity(dim(), dim()));
    return Tinv.transpose() * Tinv;
  }

  /// y = T x (columnwise for matrices).
  template <typename Derived>
  Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>
  multiply(const Eigen::MatrixBase<Derived>& x) const {
    check_rows(x.rows());
    Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> y =
        Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>::Zero(
            x.rows(), x.cols());
    const SparsityPattern& p = *pattern_;
    for (int k = 0; k < nnz(); ++k)
      y.row(p.row(k)) += values_(k) * x.row(p.col(k));
    return y;
  }

  /// y = Tᵀ x (columnwise for matrices).
  template <typename Derived>
  Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>
  multiply_transpose(const Eigen::MatrixBase<Derived>& x) const {
    check_rows(x.rows());
    Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> y =
        Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>::Zero(
            x.rows(), x.cols());
    const SparsityPattern& p = *pattern_;
    for (int k = 0; k < nnz(); ++k)
      y.row(p.col(k)) += values_(k) * x.row(p.row(k));
    return y;
  }

  /// Solves T x = b by forward substitution.
  template <typename Derived>
  Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>
  solve_lower(const Eigen::MatrixBase<Derived>& b) const {
    check_rows(b.rows());
    Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> x = b;
    const SparsityPattern& p = *pattern_;
    for (int j = 0; j < dim(); ++j) {
      const int kd = p.diag_index(j);
      check_diag(j, values_(kd));
      x.row(j) /= values_(kd);
      for (int k = kd + 1; k < p.col_begin(j + 1); ++k)
        x.row(p.row(k)) -= values_(k) * x.row(j);
    }
    return x;
  }

  /// Solves Tᵀ x = b by back substitution.
  template <typename Derived>
  Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>
  solve_upper_transpose(const Eigen::MatrixBase<Derived>& b) const {
    check_rows(b.rows());
    Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> x = b;
    const SparsityPattern& p = *pattern_;
    for (int j = dim() - 1; j >= 0; --j) {
      const int kd = p.diag_index(j);
      check_diag(j, values_(kd));
      for (int k = kd + 1; k < p.col_begin(j + 1); ++k)
        x.row(j) -= values_(k) * x.row(p.row(k));
      x.row(j) /= values_(kd);
    }
    return x;
  }

  /// Σ b = T^{-ᵀ}(T^{-1} b) without forming Σ.
  template <typename Derived>
  Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime>
  covariance_multiply(const Eigen::MatrixBase<Derived>& b) const {
    return solve_upper_transpose(solve_lower(b));
  }

 private:
  void check_rows(Eigen::Index rows) const {
    if (rows != dim())
      throw std::invalid_argument("dimension mismatch with factor");
  }
  static void check_diag(int j, double v) {
    if (!(std::abs(v) >= kSingularDiag))
      throw SingularFactorError(j);
  }

  std::shared_ptr<const SparsityPattern> pattern_;
  Eigen::VectorXd values_;
  Eigen::VectorXd star_;
};

template <typename Derived>
auto solve_lower(const CholFactor& T, const Eigen::MatrixBase<Derived>& b) {
  return T.solve_lower(b);
}

template <typename Derived>
auto solve_upper_transpose(const CholFactor& T,
                           const Eigen::MatrixBase<Derived>& b) {
  return T.solve_upper_transpose(b);
}

/**
 * Chain-rule scaling from gradients in T to gradients in T*: T_ii at
 * diagonal positions and 1 elsewhere.
 */
class DiagScaler {
 public:
  explicit DiagScaler(const CholFactor& T) : d_(Eigen::VectorXd::Ones(T.nnz())) {
    for (int j = 0; j < T.dim(); ++j)
      d_(T.pattern().diag_index(j)) = T.diag(j);
  }

  const Eigen::VectorXd& d_diag() const { return d_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    if (g.size() != d_.size())
      throw std::invalid_argument("gradient length does not match pattern");
    return g.cwiseProduct(d_);
  }

 private:
  Eigen::VectorXd d_;
};

struct GatherResult {
  Eigen::VectorXd values;
  /// Nonzero entries of the input that fell outside the pattern.
  int dropped = 0;
};

/// Collects the pattern positions of a square matrix.
inline GatherResult vech_gather(const SparsityPattern& p,
                                const Eigen::MatrixXd& A) {
  if (A.rows() != p.dim() || A.cols() != p.dim())
    throw std::invalid_argument("matrix size does not match pattern");
  GatherResult out;
  out.values.resize(p.nnz());
  for (int k = 0; k < p.nnz(); ++k)
    out.values(k) = A(p.row(k), p.col(k));
  for (int j = 0; j < A.cols(); ++j)
    for (int i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0 && !p.contains(i, j))
        ++out.dropped;
  return out;
}

/// Places pattern-aligned values into a zero matrix.
inline Eigen::MatrixXd vech_scatter(const SparsityPattern& p,
                                    const Eigen::VectorXd& v) {
  if (v.size() != p.nnz())
    throw std::invalid_argument("vector length does not match pattern");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  for (int k = 0; k < p.nnz(); ++k)
    A(p.row(k), p.col(k)) = v(k);
  return A;
}

/**
 * Pattern entries of the low-rank product L Rᵀ: out_k = L.row(i) · R.row(j)
 * for the k-th nonzero (i, j). Cost O(nnz · cols).
 */
inline Eigen::VectorXd pattern_outer(const SparsityPattern& p,
                                     const Eigen::MatrixXd& L,
                                     const Eigen::MatrixXd& R) {
  if (L.rows() != p.dim() || R.rows() != p.dim() || L.cols() != R.cols())
    throw std::invalid_argument("pattern_outer: shape mismatch");
  const Eigen::MatrixXd Lt = L.transpose();
  const Eigen::MatrixXd Rt = R.transpose();
  Eigen::VectorXd out(p.nnz());
  for (int k = 0; k < p.nnz(); ++k)
    out(k) = Lt.col(p.row(k)).dot(Rt.col(p.col(k)));
  return out;
}

}  // namespace wfvi

#endif
