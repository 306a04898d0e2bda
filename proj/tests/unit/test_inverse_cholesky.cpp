#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "vecchia/error.hpp"
#include "vecchia/grouping.hpp"
#include "vecchia/inverse_cholesky.hpp"
#include "vecchia/neighbors.hpp"
#include "vecchia/structure.hpp"

using namespace vecchia;

namespace {

const double log_2pi = std::log(2.0 * M_PI);

Eigen::MatrixXd permuted_covariance(const CovarianceModel& model, const Locations& locs, const Permutation& perm) {
  return oracle::covariance(model, locs, perm.forward());
}

// Inverse Cholesky factor L^{-1} of a dense SPD matrix.
Eigen::MatrixXd dense_inverse_cholesky(const Eigen::MatrixXd& s) {
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(s.rows(), s.cols());
  return llt.matrixL().solve(id);
}

double max_relative_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(InverseCholesky, SinglePoint) {
  const Locations locs(2, {0.3, 0.7});
  const auto model = CovarianceModel::matern(2.0, 0.2, 1.5, 0.5);
  const auto g = build_gamma_tilde(model, locs, Permutation::identity(1), NeighborSets::full(1));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g.diagonal(0), 1.0 / std::sqrt(2.5));

  const std::vector<double> y{model.mean};
  EXPECT_NEAR(loglik(g, y, model.mean), -0.5 * log_2pi - 0.5 * std::log(2.5), 1e-14);
}

TEST(InverseCholesky, ConstructorValidation) {
  EXPECT_NO_THROW(SparseInverseCholesky({0, 1, 3}, {0, 0, 1}, {1.0, -0.5, 2.0}));
  // row 1 does not end on its diagonal
  EXPECT_THROW(SparseInverseCholesky({0, 1, 3}, {0, 1, 0}, {1.0, 2.0, -0.5}), InvalidArgument);
  // nonpositive diagonal
  EXPECT_THROW(SparseInverseCholesky({0, 1, 3}, {0, 0, 1}, {1.0, -0.5, 0.0}), InvalidArgument);
}

TEST(InverseCholesky, FullConditioningIsExact) {
  const auto locs = oracle::uniform_points(60, 2, 11);
  for (const auto& model : {CovarianceModel::exponential(1.3, 0.2), CovarianceModel::matern(1.0, 0.1, 1.7, 0.05)}) {
    const auto perm = order_random(locs.size(), 4);
    const auto sets = NeighborSets::full(locs.size());
    const auto g = build_gamma_tilde(model, locs, perm, sets);
    const Eigen::MatrixXd exact = dense_inverse_cholesky(permuted_covariance(model, locs, perm));
    EXPECT_LT(max_relative_diff(g.to_dense(), exact), 1e-10);

    const auto y = oracle::gaussian_sample(oracle::covariance(model, locs), 5);
    const auto y_perm = perm.apply(y);
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    const double dense = oracle::log_density(oracle::covariance(model, locs), r);
    EXPECT_NEAR(loglik(g, y_perm), dense, 1e-8 * std::abs(dense));
  }
}

TEST(InverseCholesky, MatchesConditionalOracle) {
  const auto locs = oracle::uniform_points(150, 2, 21);
  const auto model = CovarianceModel::matern(1.0, 0.15, 1.0, 0.01);
  const auto perm = order_ammd(locs);
  const auto sets = nn_ordered_fast(locs, perm, 8);
  const auto g = build_gamma_tilde(model, locs, perm, sets);
  EXPECT_LT(max_relative_diff(g.to_dense(), oracle::gamma_dense(model, locs, perm, sets)), 1e-9);

  const auto y = oracle::gaussian_sample(oracle::covariance(model, locs), 6);
  const double expected = oracle::vecchia_loglik(model, locs, perm, sets, y, 0.4);
  EXPECT_NEAR(loglik(g, perm.apply(y), 0.4), expected, 1e-9 * std::abs(expected));
}

TEST(InverseCholesky, SortedExponentialWithOneNeighborIsExact) {
  std::vector<double> x(80);
  Philox rng(7, 0);
  for (double& v : x) v = rng.uniform();
  const Locations locs(1, x);
  const auto model = CovarianceModel::exponential(2.0, 0.3);
  const auto perm = order_sorted_coordinate(locs);
  const auto g = build_gamma_tilde(model, locs, perm, nn_ordered_fast(locs, perm, 1));

  const auto y = oracle::gaussian_sample(oracle::covariance(model, locs), 8);
  const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  const double dense = oracle::log_density(oracle::covariance(model, locs), r);
  EXPECT_NEAR(loglik(g, perm.apply(y)), dense, 1e-9 * std::abs(dense));
}

TEST(InverseCholesky, SingletonBlocksMatchUngroupedBitForBit) {
  const auto locs = oracle::uniform_points(300, 2, 31);
  const auto model = CovarianceModel::matern(1.0, 0.1, 2.5, 0.0);
  const auto perm = order_random(locs.size(), 1);
  const auto sets = nn_ordered_fast(locs, perm, 12);
  const auto ungrouped = build_gamma_tilde(model, locs, perm, sets);
  const auto grouped = build_gamma_tilde(model, locs, perm, BlockPartition::singletons(sets));
  EXPECT_TRUE(grouped == ungrouped);

  const auto y = perm.apply(oracle::gaussian_sample(Eigen::MatrixXd::Identity(300, 300), 2));
  EXPECT_EQ(loglik(grouped, y), loglik(ungrouped, y));
}

TEST(InverseCholesky, GroupedEqualsUngroupedOnExpandedSets) {
  const auto locs = oracle::uniform_points(400, 2, 41);
  const auto model = CovarianceModel::matern(1.0, 0.1, 1.0, 0.02);
  const auto perm = order_ammd(locs);
  const auto blocks = group_blocks(nn_ordered_fast(locs, perm, 10));
  const auto grouped = build_gamma_tilde(model, locs, perm, blocks);
  const auto expanded = build_gamma_tilde(model, locs, perm, blocks.expanded_sets());
  ASSERT_EQ(grouped.nonzeros(), expanded.nonzeros());
  EXPECT_LT(max_relative_diff(grouped.to_dense(), expanded.to_dense()), 1e-10);
}

TEST(InverseCholesky, ThreadCountDoesNotChangeResult) {
  const auto locs = oracle::uniform_points(1000, 2, 51);
  const auto model = CovarianceModel::matern(1.0, 0.05, 1.5, 0.0);
  const VecchiaStructure grouped(locs, order_ammd(locs), StructureOptions{.m = 15, .grouped = true});
  const VecchiaStructure plain(locs, order_ammd(locs), StructureOptions{.m = 15, .grouped = false});
  for (const auto* s : {&grouped, &plain}) {
    const auto one = s->build(model, locs, 1);
    EXPECT_TRUE(one == s->build(model, locs, 4));
    EXPECT_TRUE(one == s->build(model, locs, 7));
  }
}

TEST(InverseCholesky, DecorrelationMoments) {
  // With Gamma built at the covariance of Y, every Z_i = (Gamma Y)_i has
  // unit variance and tr(Gamma^T Gamma Sigma) = n.
  const auto locs = oracle::uniform_points(120, 2, 61);
  const auto model = CovarianceModel::matern(1.5, 0.2, 0.8, 0.1);
  const auto perm = order_random(locs.size(), 3);
  const auto blocks = group_blocks(nn_ordered_fast(locs, perm, 6));
  const Eigen::MatrixXd s = permuted_covariance(model, locs, perm);
  for (auto g : {build_gamma_tilde(model, locs, perm, blocks.base_sets()), build_gamma_tilde(model, locs, perm, blocks)}) {
    const Eigen::MatrixXd dense = g.to_dense();
    const Eigen::MatrixXd var = dense * s * dense.transpose();
    EXPECT_LT((var.diagonal().array() - 1.0).abs().maxCoeff(), 1e-10);
    const double trace = (dense.transpose() * dense * s).trace();
    EXPECT_NEAR(trace, 120.0, 120.0 * 1e-8);
  }
}

TEST(InverseCholesky, DiagonalGrowsWithConditioningSet) {
  const auto locs = oracle::uniform_points(200, 2, 71);
  const auto model = CovarianceModel::matern(1.0, 0.2, 1.0, 0.0);
  const auto perm = order_random(locs.size(), 9);
  const auto large = nn_ordered_fast(locs, perm, 12);
  for (std::size_t m : {0, 1, 4, 8}) {
    const auto small = large.truncated(m);
    ASSERT_TRUE(small.subset_of(large));
    const auto g1 = build_gamma_tilde(model, locs, perm, small);
    const auto g2 = build_gamma_tilde(model, locs, perm, large);
    for (std::size_t i = 0; i < locs.size(); ++i) EXPECT_LE(g1.diagonal(i), g2.diagonal(i) * (1 + 1e-12)) << i;
  }
}

TEST(InverseCholesky, SolveMatchesDenseTriangularSolve) {
  const auto locs = oracle::uniform_points(300, 2, 81);
  const auto model = CovarianceModel::exponential(1.0, 0.1);
  const auto perm = order_ammd(locs);
  const auto g = build_gamma_tilde(model, locs, perm, group_blocks(nn_ordered_fast(locs, perm, 10)));
  const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(
      oracle::gaussian_sample(Eigen::MatrixXd::Identity(300, 300), 4).data(), 300);
  const Eigen::MatrixXd dense = g.to_dense();
  const Eigen::VectorXd expected = dense.triangularView<Eigen::Lower>().solve(z);
  EXPECT_LT((g.solve(z) - expected).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((g.multiply(expected) - z).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(g.log_det(), dense.diagonal().array().log().sum(), 1e-10);
}

TEST(InverseCholesky, FactorizationFailureNamesTheRow) {
  // Two coincident points without nugget or jitter make a singular block.
  const Locations locs(2, {0.0, 0.0, 0.5, 0.5, 0.5, 0.5});
  const auto model = CovarianceModel::matern(1.0, 0.3, 0.5);
  const auto previous = set_warning_handler([](const std::string&) {});
  try {
    build_gamma_tilde(model, locs, Permutation::identity(3), NeighborSets::full(3));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("row 2"), std::string::npos) << what;
    EXPECT_NE(what.find("jitter"), std::string::npos) << what;
  }
  auto with_jitter = model;
  with_jitter.jitter = 1e-8;
  EXPECT_NO_THROW(build_gamma_tilde(with_jitter, locs, Permutation::identity(3), NeighborSets::full(3)));
  set_warning_handler(previous);
}

TEST(InverseCholesky, LengthMismatch) {
  const auto locs = oracle::uniform_points(5, 2, 1);
  const auto g = build_gamma_tilde(CovarianceModel{}, locs, Permutation::identity(5), NeighborSets::full(5));
  const std::vector<double> y(4, 0.0);
  EXPECT_THROW(loglik(g, y), InvalidArgument);
}

TEST(ProfileBeta, ConstantMeanIsGls) {
  const auto locs = oracle::uniform_points(80, 2, 91);
  const auto model = CovarianceModel::matern(1.0, 0.2, 1.0, 0.05);
  const auto perm = order_random(locs.size(), 2);
  const auto g = build_gamma_tilde(model, locs, perm, NeighborSets::full(locs.size()));
  const Eigen::MatrixXd s = oracle::covariance(model, locs);
  auto y = oracle::gaussian_sample(s, 3);
  for (double& v : y) v += 2.0;

  const Eigen::VectorXd one = Eigen::VectorXd::Ones(80);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), 80);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  const double gls = one.dot(ldlt.solve(yv)) / one.dot(ldlt.solve(one));

  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(80, 1);
  const auto result = profile_beta(g, permute_rows(x, perm), perm.apply(y));
  ASSERT_EQ(result.beta.size(), 1);
  EXPECT_NEAR(result.beta[0], gls, 1e-9);
  EXPECT_NEAR(result.loglik, oracle::log_density(s, yv.array() - gls), 1e-8);
}

TEST(ProfileBeta, ExactFitHasZeroResidual) {
  const auto locs = oracle::uniform_points(50, 2, 101);
  const auto model = CovarianceModel::exponential(1.0, 0.2);
  const auto perm = order_ammd(locs);
  const auto g = build_gamma_tilde(model, locs, perm, nn_ordered_fast(locs, perm, 5));
  Eigen::MatrixXd x(50, 3);
  for (Eigen::Index i = 0; i < 50; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = locs.coord(static_cast<std::size_t>(i), 0);
    x(i, 2) = locs.coord(static_cast<std::size_t>(i), 1);
  }
  const Eigen::Vector3d beta0(0.5, -1.0, 3.0);
  const Eigen::VectorXd y = x * beta0;
  const auto result =
      profile_beta(g, permute_rows(x, perm), perm.apply(std::span<const double>(y.data(), 50)));
  EXPECT_LT((result.beta - beta0).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(result.loglik, -25.0 * log_2pi + g.log_det(), 1e-9);
}

TEST(ProfileBeta, IdentityGammaIsOrdinaryLeastSquares) {
  std::vector<std::size_t> offsets{0};
  std::vector<int> columns;
  std::vector<double> values;
  for (int i = 0; i < 10; ++i) {
    columns.push_back(i);
    values.push_back(1.0);
    offsets.push_back(columns.size());
  }
  const SparseInverseCholesky g(offsets, columns, values);
  Eigen::MatrixXd x(10, 1);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i + 1.0;
    y[static_cast<std::size_t>(i)] = 2.0 * (i + 1.0) + (i % 2 == 0 ? 0.5 : -0.5);
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), 10);
  const double ols = x.col(0).dot(yv) / x.col(0).squaredNorm();
  EXPECT_NEAR(profile_beta(g, x, y).beta[0], ols, 1e-13);
}

TEST(ProfileBeta, RankDeficiencyThrows) {
  const auto locs = oracle::uniform_points(20, 2, 111);
  const auto g = build_gamma_tilde(CovarianceModel{}, locs, Permutation::identity(20), NeighborSets::full(20));
  Eigen::MatrixXd x(20, 2);
  x.col(0).setOnes();
  x.col(1).setConstant(2.0);
  const std::vector<double> y(20, 1.0);
  EXPECT_THROW(profile_beta(g, x, y), NumericalError);
}
