#ifndef WFVI_CORE_SPARSITY_PATTERN_HPP
#define WFVI_CORE_SPARSITY_PATTERN_HPP

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wfvi {

/**
 * Lower-triangular nonzero layout of a Cholesky factor T of the precision
 * matrix for θ = (b_1, ..., b_n, θ_G).
 *
 * Positions are the diagonal blocks T_ii, the off-diagonal blocks T_ij with
 * 1 <= i - j <= markov_order, and all global rows T_Gj, T_GG. Nonzeros are
 * stored column-major: column by column, rows ascending, so the first entry
 * of every column is its diagonal.
 */
class SparsityPattern {
 public:
  SparsityPattern() = default;

  /**
   * Block-banded pattern.
   *
   * @param n_blocks number of local blocks (>= 1)
   * @param block_dims dimension of each local block (each >= 1)
   * @param global_dim dimension of the global block (>= 0)
   * @param markov_order bandwidth in blocks (0 <= markov_order < n_blocks)
   * @throw std::invalid_argument on inconsistent arguments
   */
  static SparsityPattern block_banded(int n_blocks,
                                      const std::vector<int>& block_dims,
                                      int global_dim, int markov_order) {
    if (n_blocks < 1)
      throw std::invalid_argument("n_blocks must be >= 1");
    if (static_cast<int>(block_dims.size()) != n_blocks)
      throw std::invalid_argument("block_dims length must equal n_blocks");
    if (global_dim < 0)
      throw std::invalid_argument("global_dim must be >= 0");
    if (markov_order < 0)
      throw std::invalid_argument("markov_order must be >= 0");
    if (markov_order >= n_blocks)
      throw std::invalid_argument("markov_order must be < n_blocks");
    for (int b : block_dims)
      if (b < 1)
        throw std::invalid_argument("block dimensions must be >= 1");

    SparsityPattern p;
    p.n_blocks_ = n_blocks;
    p.block_dims_ = block_dims;
    p.global_dim_ = global_dim;
    p.markov_order_ = markov_order;
    p.dense_ = false;

    std::vector<int> offset(n_blocks + 1, 0);
    for (int k = 0; k < n_blocks; ++k)
      offset[k + 1] = offset[k] + block_dims[k];
    const int local = offset[n_blocks];
    const int d = local + global_dim;

    std::vector<std::pair<int, int>> entries;
    for (int k = 0; k < n_blocks; ++k) {
      for (int c = offset[k]; c < offset[k + 1]; ++c) {
        for (int r = c; r < offset[k + 1]; ++r)
          entries.emplace_back(r, c);
        const int last = std::min(n_blocks - 1, k + markov_order);
        for (int k2 = k + 1; k2 <= last; ++k2)
          for (int r = offset[k2]; r < offset[k2 + 1]; ++r)
            entries.emplace_back(r, c);
        for (int r = local; r < d; ++r)
          entries.emplace_back(r, c);
      }
    }
    for (int c = local; c < d; ++c)
      for (int r = c; r < d; ++r)
        entries.emplace_back(r, c);
    p.finalize(d, entries);
    return p;
  }

  /// Full lower triangle of a d x d matrix.
  static SparsityPattern dense(int d) {
    if (d < 1)
      throw std::invalid_argument("dimension must be >= 1");
    SparsityPattern p;
    p.n_blocks_ = 1;
    p.block_dims_ = {d};
    p.global_dim_ = 0;
    p.markov_order_ = 0;
    p.dense_ = true;
    std::vector<std::pair<int, int>> entries;
    for (int c = 0; c < d; ++c)
      for (int r = c; r < d; ++r)
        entries.emplace_back(r, c);
    p.finalize(d, entries);
    return p;
  }

  /// Diagonal-only pattern (mean-field family).
  static SparsityPattern diagonal(int d) {
    return block_banded(d, std::vector<int>(d, 1), 0, 0);
  }

  int dim() const { return dim_; }
  int nnz() const { return static_cast<int>(rows_.size()); }
  int n_blocks() const { return n_blocks_; }
  const std::vector<int>& block_dims() const { return block_dims_; }
  int global_dim() const { return global_dim_; }
  int markov_order() const { return markov_order_; }
  bool is_dense() const { return dense_; }

  int row(int k) const { return rows_[k]; }
  int col(int k) const { return cols_[k]; }
  const std::vector<int>& rows() const { return rows_; }
  const std::vector<int>& cols() const { return cols_; }

  /// Index of the first nonzero of column j; entries of column j occupy
  /// [col_begin(j), col_begin(j + 1)).
  int col_begin(int j) const { return col_ptr_[j]; }
  /// Index of the diagonal entry (j, j).
  int diag_index(int j) const { return col_ptr_[j]; }
  bool is_diag(int k) const { return rows_[k] == cols_[k]; }

  /// Index of (i, j) in the nonzero list, or -1 if outside the pattern.
  int find(int i, int j) const {
    if (i < j || j < 0 || i >= dim_)
      return -1;
    auto first = rows_.begin() + col_ptr_[j];
    auto last = rows_.begin() + col_ptr_[j + 1];
    auto it = std::lower_bound(first, last, i);
    if (it == last || *it != i)
      return -1;
    return static_cast<int>(it - rows_.begin());
  }
  bool contains(int i, int j) const { return find(i, j) >= 0; }

  std::vector<std::pair<int, int>> explicit_nonzeros() const {
    std::vector<std::pair<int, int>> out(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      out[k] = {rows_[k], cols_[k]};
    return out;
  }

  friend bool operator==(const SparsityPattern& a, const SparsityPattern& b) {
    return a.dim_ == b.dim_ && a.rows_ == b.rows_ && a.cols_ == b.cols_;
  }

 private:
  void finalize(int d, std::vector<std::pair<int, int>>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second < b.second
                                            : a.first < b.first;
              });
    dim_ = d;
    rows_.resize(entries.size());
    cols_.resize(entries.size());
    col_ptr_.assign(d + 1, 0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
      rows_[k] = entries[k].first;
      cols_[k] = entries[k].second;
      ++col_ptr_[entries[k].second + 1];
    }
    std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
  }

  int dim_ = 0;
  int n_blocks_ = 0;
  std::vector<int> block_dims_;
  int global_dim_ = 0;
  int markov_order_ = 0;
  bool dense_ = false;
  std::vector<int> rows_;
  std::vector<int> cols_;
  std::vector<int> col_ptr_;
};

}  // namespace wfvi

#endif
