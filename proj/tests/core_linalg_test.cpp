#include <wfvi/core/chol_factor.hpp>
#include <wfvi/core/sparsity_pattern.hpp>

#include <gtest/gtest.h>
#include <test_util.hpp>

#include <random>
#include <set>
#include <utility>
#include <vector>

using wfvi::CholFactor;
using wfvi::SparsityPattern;

namespace {

std::set<std::pair<int, int>> nonzero_set(const SparsityPattern& p) {
  auto v = p.explicit_nonzeros();
  return {v.begin(), v.end()};
}

CholFactor random_factor(const SparsityPattern& p, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd star(p.nnz());
  for (int k = 0; k < p.nnz(); ++k)
    star(k) = p.is_diag(k) ? 0.3 * n01(rng) : 0.5 * n01(rng);
  return CholFactor::from_star(p, star);
}

}  // namespace

TEST(SparsityPattern, NoMarkovBandWithGlobalBlock) {
  auto p = SparsityPattern::block_banded(2, {1, 1}, 1, 0);
  std::set<std::pair<int, int>> expected{{0, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}};
  EXPECT_EQ(nonzero_set(p), expected);
  EXPECT_EQ(p.dim(), 3);
}

TEST(SparsityPattern, FirstOrderBandAddsSubdiagonalBlocks) {
  auto p0 = SparsityPattern::block_banded(3, {1, 1, 1}, 1, 0);
  auto p1 = SparsityPattern::block_banded(3, {1, 1, 1}, 1, 1);
  auto s0 = nonzero_set(p0);
  auto s1 = nonzero_set(p1);
  s0.insert({1, 0});
  s0.insert({2, 1});
  EXPECT_EQ(s0, s1);
}

TEST(SparsityPattern, SingleBlockIsFullLowerTriangle) {
  auto p = SparsityPattern::block_banded(1, {2}, 0, 0);
  std::set<std::pair<int, int>> expected{{0, 0}, {1, 0}, {1, 1}};
  EXPECT_EQ(nonzero_set(p), expected);
  EXPECT_EQ(nonzero_set(p), nonzero_set(SparsityPattern::dense(2)));
}

TEST(SparsityPattern, RejectsMarkovOrderAtLeastBlockCount) {
  EXPECT_THROW(SparsityPattern::block_banded(2, {1, 1}, 0, 2),
               std::invalid_argument);
  EXPECT_THROW(SparsityPattern::block_banded(2, {1, 0}, 0, 0),
               std::invalid_argument);
}

TEST(SparsityPattern, ColumnMajorOrderWithDiagonalFirst) {
  auto p = SparsityPattern::block_banded(4, {2, 1, 3, 1}, 2, 1);
  EXPECT_EQ(p.dim(), 9);
  for (int k = 0; k < p.nnz(); ++k) {
    EXPECT_GE(p.row(k), p.col(k));
    if (k > 0) {
      EXPECT_TRUE(p.col(k) > p.col(k - 1)
                  || (p.col(k) == p.col(k - 1) && p.row(k) > p.row(k - 1)));
    }
  }
  for (int j = 0; j < p.dim(); ++j)
    EXPECT_TRUE(p.is_diag(p.diag_index(j)));
}

TEST(SolveLower, Identity) {
  CholFactor T(SparsityPattern::dense(2));
  Eigen::Vector2d b(3, -1);
  EXPECT_TRUE(T.solve_lower(b).isApprox(b));
}

TEST(SolveLower, TwoByTwoByHand) {
  Eigen::Matrix2d M;
  M << 2, 0, 1, 1;
  auto T = CholFactor::from_dense(SparsityPattern::dense(2), M);
  Eigen::Vector2d x = wfvi::solve_lower(T, Eigen::Vector2d(2, 3));
  EXPECT_DOUBLE_EQ(x(0), 1.0);
  EXPECT_DOUBLE_EQ(x(1), 2.0);
  Eigen::Vector2d y = wfvi::solve_upper_transpose(T, Eigen::Vector2d(2, 3));
  EXPECT_DOUBLE_EQ(y(0), -0.5);
  EXPECT_DOUBLE_EQ(y(1), 3.0);
}

TEST(SolveLower, SingularDiagonalSignalled) {
  auto p = SparsityPattern::dense(2);
  Eigen::VectorXd star = Eigen::VectorXd::Zero(3);
  star(0) = -1000.0;  // clamped to -700, still below 1e-300
  auto T = CholFactor::from_star(p, star);
  EXPECT_DOUBLE_EQ(T.star_values()(0), wfvi::kMinLogDiag);
  EXPECT_THROW(T.solve_lower(Eigen::Vector2d(1, 1)), wfvi::SingularFactorError);
}

TEST(SolveLower, RandomSparseRoundTrip) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 20 + 3 * rep;
    std::vector<int> dims(n);
    for (int i = 0; i < n; ++i)
      dims[i] = 1 + (i % 3);
    auto p = SparsityPattern::block_banded(n, dims, 4, rep % 3);
    ASSERT_LE(p.dim(), 200);
    auto T = random_factor(p, rng);
    Eigen::VectorXd x = wfvi::test::random_normal(p.dim(), rng);
    Eigen::VectorXd r1 = T.solve_lower(T.multiply(x));
    Eigen::VectorXd r2 = T.solve_upper_transpose(T.multiply_transpose(x));
    EXPECT_LT((r1 - x).norm() / x.norm(), 1e-10);
    EXPECT_LT((r2 - x).norm() / x.norm(), 1e-10);
    Eigen::MatrixXd Td = T.to_dense();
    EXPECT_LT((T.multiply(x) - Td * x).norm(), 1e-10);
    EXPECT_LT((T.multiply_transpose(x) - Td.transpose() * x).norm(), 1e-10);
  }
}

TEST(CholFactor, StarRoundTrip) {
  std::mt19937_64 rng(3);
  auto p = SparsityPattern::block_banded(5, {1, 2, 1, 2, 1}, 2, 1);
  auto T = random_factor(p, rng);
  auto T2 = CholFactor::from_values(p, T.values());
  EXPECT_LT((T2.star_values() - T.star_values()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CholFactor, PrecisionZerosFollowMarkovStructure) {
  // With ℓ = 1, blocks i and j with |i - j| > 1 are conditionally
  // independent given θ_G: Ω_ij = 0.
  std::mt19937_64 rng(5);
  const int n = 8;
  std::vector<int> dims{1, 2, 1, 3, 2, 1, 2, 1};
  auto p = SparsityPattern::block_banded(n, dims, 3, 1);
  ASSERT_LE(p.dim(), 30);
  auto T = random_factor(p, rng);
  Eigen::MatrixXd Omega = T.precision();
  std::vector<int> block_of;
  for (int k = 0; k < n; ++k)
    for (int r = 0; r < dims[k]; ++r)
      block_of.push_back(k);
  for (int i = 0; i < static_cast<int>(block_of.size()); ++i)
    for (int j = 0; j < static_cast<int>(block_of.size()); ++j)
      if (std::abs(block_of[i] - block_of[j]) > 1)
        EXPECT_EQ(Omega(i, j), 0.0) << i << "," << j;
}

TEST(Vech, GatherScatterIdentity) {
  auto p = SparsityPattern::dense(2);
  auto g = wfvi::vech_gather(p, Eigen::Matrix2d::Identity());
  EXPECT_EQ(g.values, Eigen::Vector3d(1, 0, 1));
  EXPECT_EQ(g.dropped, 0);
  EXPECT_EQ(wfvi::vech_scatter(p, g.values), Eigen::MatrixXd::Identity(2, 2));
}

TEST(Vech, GatherDropsOffPatternEntry) {
  auto p = SparsityPattern::block_banded(3, {1, 1, 1}, 0, 0);  // diagonal
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  A(2, 0) = 4.0;
  auto g = wfvi::vech_gather(p, A);
  EXPECT_EQ(g.dropped, 1);
  EXPECT_EQ(g.values, Eigen::Vector3d(1, 1, 1));
}

TEST(Vech, LengthMismatchRejected) {
  auto p = SparsityPattern::dense(3);
  EXPECT_THROW(wfvi::vech_scatter(p, Eigen::VectorXd::Zero(4)),
               std::invalid_argument);
  EXPECT_THROW(wfvi::vech_gather(p, Eigen::MatrixXd::Zero(2, 2)),
               std::invalid_argument);
}

TEST(DiagScaler, AppliedTwiceIsElementwiseSquare) {
  std::mt19937_64 rng(8);
  auto p = SparsityPattern::dense(4);
  auto T = random_factor(p, rng);
  wfvi::DiagScaler D(T);
  Eigen::VectorXd g = wfvi::test::random_normal(p.nnz(), rng);
  EXPECT_TRUE(D.apply(D.apply(g)).isApprox(
      g.cwiseProduct(D.d_diag().cwiseProduct(D.d_diag()))));
}

TEST(DiagScaler, ChainRuleMatchesFiniteDifferencesInStar) {
  std::mt19937_64 rng(9);
  auto p = SparsityPattern::block_banded(3, {2, 1, 2}, 1, 1);
  auto T = random_factor(p, rng);
  Eigen::VectorXd a = wfvi::test::random_normal(p.dim(), rng);
  // f(T) = log|T| + ½ ‖Tᵀa‖²; ∂f/∂T_ij = δ_ij / T_ii + a_i (Tᵀa)_j
  auto f_of_star = [&](const Eigen::VectorXd& star) {
    auto Ts = CholFactor::from_star(p, star);
    return Ts.sum_log_diag() + 0.5 * Ts.multiply_transpose(a).squaredNorm();
  };
  Eigen::VectorXd Tta = T.multiply_transpose(a);
  Eigen::VectorXd gT(p.nnz());
  for (int k = 0; k < p.nnz(); ++k)
    gT(k) = (p.is_diag(k) ? 1.0 / T.values()(k) : 0.0)
            + a(p.row(k)) * Tta(p.col(k));
  Eigen::VectorXd analytic = wfvi::DiagScaler(T).apply(gT);
  Eigen::VectorXd numeric = wfvi::test::fd_gradient(f_of_star, T.star_values());
  EXPECT_LT((analytic - numeric).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PatternOuter, MatchesDenseProduct) {
  std::mt19937_64 rng(10);
  auto p = SparsityPattern::block_banded(4, {1, 2, 1, 1}, 2, 1);
  Eigen::MatrixXd L = Eigen::MatrixXd::Random(p.dim(), 3);
  Eigen::MatrixXd R = Eigen::MatrixXd::Random(p.dim(), 3);
  Eigen::MatrixXd full = L * R.transpose();
  Eigen::VectorXd v = wfvi::pattern_outer(p, L, R);
  for (int k = 0; k < p.nnz(); ++k)
    EXPECT_NEAR(v(k), full(p.row(k), p.col(k)), 1e-14);
}
