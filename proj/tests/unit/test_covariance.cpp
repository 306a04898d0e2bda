#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vecchia/covariance.hpp"
#include "vecchia/error.hpp"

using namespace vecchia;

namespace {

std::vector<std::string> captured;
void capture(const std::string& message) { captured.push_back(message); }

}  // namespace

TEST(Kernel, ZeroDistanceIsVariancePlusNugget) {
  const std::vector<double> p{0.3, 0.4};
  EXPECT_DOUBLE_EQ(kernel(CovarianceModel::matern(1.0, 0.1, 1.0), p, p), 1.0);
  EXPECT_DOUBLE_EQ(kernel(CovarianceModel::matern(2.0, 0.1, 1.3, 0.25), p, p), 2.25);
}

TEST(Kernel, ClosedFormValues) {
  const std::vector<double> a{0.0};
  const std::vector<double> b{0.1};
  const std::vector<double> c{0.2};
  EXPECT_NEAR(kernel(CovarianceModel::exponential(1.0, 0.1), a, b), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel(CovarianceModel::exponential(1.0, 0.1), a, b), 0.3678794, 1e-7);
  EXPECT_NEAR(kernel(CovarianceModel::matern(2.0, 0.2, 1.5), a, c), 4.0 * std::exp(-1.0), 1e-14);
  EXPECT_NEAR(kernel(CovarianceModel::matern(2.0, 0.2, 1.5), a, c), 1.4715178, 1e-7);
}

TEST(Kernel, NuggetOnlyOnIdenticalPoints) {
  const auto model = CovarianceModel::matern(1.0, 0.3, 0.5, 0.5);
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{1e-9, 0.0};
  EXPECT_NEAR(kernel(model, a, b), std::exp(-1e-9 / 0.3), 1e-15);
}

TEST(Kernel, GeneralSmoothnessMatchesClosedForms) {
  for (double nu : {0.5, 1.5, 2.5}) {
    for (double s = 1e-6; s <= 20.0; s *= 1.37) {
      const double closed = matern_correlation(s, nu);
      const double general = detail::matern_correlation_general(s, nu);
      EXPECT_NEAR(general, closed, 1e-9 * closed) << "nu=" << nu << " s=" << s;
    }
  }
}

TEST(Kernel, MaternMatchesBesselDefinition) {
  for (double nu : {0.3, 1.0, 2.2}) {
    for (double r : {0.01, 0.1, 0.5, 1.5}) {
      const double alpha = 0.4;
      const double s = r / alpha;
      const double expected = 1.7 / (std::tgamma(nu) * std::pow(2.0, nu - 1.0)) * std::pow(s, nu) * oracle::bessel_k(nu, s);
      EXPECT_NEAR(matern(r, 1.7, alpha, nu), expected, 1e-11 * expected);
    }
  }
}

TEST(Kernel, NonincreasingInDistance) {
  for (double nu : {0.5, 1.0, 1.5}) {
    double previous = matern(0.0, 1.0, 0.2, nu);
    EXPECT_DOUBLE_EQ(previous, 1.0);
    for (double r = 1e-4; r < 3.0; r *= 1.1) {
      const double v = matern(r, 1.0, 0.2, nu);
      EXPECT_LE(v, previous);
      EXPECT_LE(std::abs(v), 1.0);
      previous = v;
    }
  }
}

TEST(Kernel, SpaceTimeUsesScaledDistance) {
  CovarianceModel model;
  model.family = KernelFamily::matern_spacetime;
  model.variance = 1.5;
  model.range = 0.2;
  model.range_time = 3.0;
  model.smoothness = 1.0;
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{0.1, 0.1};
  const double d12 = std::sqrt(0.02 / 0.04 + 4.0 / 9.0);
  EXPECT_NEAR(kernel(model, a, 1.0, b, 3.0), matern(d12, 1.5, 1.0, 1.0), 1e-14);
  model.nugget = 0.1;
  EXPECT_NEAR(kernel(model, a, 1.0, a, 1.0), 1.6, 1e-15);
  EXPECT_NEAR(kernel(model, a, 1.0, a, 2.0), matern(1.0 / 3.0, 1.5, 1.0, 1.0), 1e-14);
}

TEST(Model, ValidationRejectsBadParameters) {
  EXPECT_THROW(CovarianceModel::matern(0.0, 0.1, 0.5).validate(), InvalidArgument);
  EXPECT_THROW(CovarianceModel::matern(1.0, -0.1, 0.5).validate(), InvalidArgument);
  EXPECT_THROW(CovarianceModel::matern(1.0, 0.1, 0.0).validate(), InvalidArgument);
  EXPECT_THROW(CovarianceModel::matern(1.0, 0.1, 0.5, -1.0).validate(), InvalidArgument);
  EXPECT_NO_THROW(CovarianceModel::matern(1.0, 0.1, 0.5, 0.0).validate());
}

TEST(Model, ParameterAccess) {
  auto model = CovarianceModel::matern(1.0, 0.1, 0.5, 0.2);
  model.set(Parameter::range, 0.3);
  EXPECT_DOUBLE_EQ(model.get(Parameter::range), 0.3);
  EXPECT_EQ(model.parameters().size(), 4u);
  model.family = KernelFamily::matern_spacetime;
  EXPECT_EQ(model.parameters().size(), 5u);
  EXPECT_EQ(parse_parameter("nugget"), Parameter::nugget);
  EXPECT_EQ(parse_family(to_string(KernelFamily::matern_spacetime)), KernelFamily::matern_spacetime);
  EXPECT_FALSE(parse_parameter("bogus").has_value());
}

TEST(CovMatrix, SingleIndex) {
  const Locations locs(2, {0.5, 0.5});
  const auto s = build_cov_matrix(CovarianceModel::matern(2.0, 0.1, 1.0, 0.3), locs);
  ASSERT_EQ(s.rows(), 1);
  EXPECT_DOUBLE_EQ(s(0, 0), 2.3);
}

TEST(CovMatrix, CoincidentPointsWithNugget) {
  const Locations locs(2, {0.5, 0.5, 0.5, 0.5});
  const auto s = build_cov_matrix(CovarianceModel::matern(2.0, 0.1, 1.0, 0.3), locs);
  EXPECT_DOUBLE_EQ(s(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(s(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(s(0, 0), 2.3);
}

TEST(CovMatrix, DuplicateWithoutNuggetWarns) {
  captured.clear();
  const auto previous = set_warning_handler(capture);
  const Locations locs(1, {0.1, 0.1, 0.4});
  build_cov_matrix(CovarianceModel::exponential(1.0, 0.1), locs);
  set_warning_handler(previous);
  EXPECT_EQ(captured.size(), 1u);
}

TEST(CovMatrix, ExponentialOneDimensionalInverseIsTridiagonal) {
  const Locations locs(1, {0.0, 0.1, 0.2});
  const Eigen::MatrixXd inv = build_cov_matrix(CovarianceModel::exponential(1.0, 0.1), locs).inverse();
  EXPECT_NEAR(inv(0, 2), 0.0, 1e-12);
  EXPECT_NEAR(inv(2, 0), 0.0, 1e-12);
  EXPECT_GT(std::abs(inv(0, 1)), 0.1);
}

TEST(CovMatrix, SymmetricAndMatchesOracle) {
  const auto locs = oracle::uniform_points(60, 3, 4);
  const auto model = CovarianceModel::matern(1.3, 0.25, 1.0, 0.01);
  const Eigen::MatrixXd s = build_cov_matrix(model, locs);
  EXPECT_EQ((s - s.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((s - oracle::covariance(model, locs)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(s).info(), Eigen::Success);
}

TEST(CovMatrix, IndexSubsetAndJitter) {
  const auto locs = oracle::uniform_points(10, 2, 5);
  auto model = CovarianceModel::matern(1.0, 0.2, 0.5);
  model.jitter = 1e-6;
  const std::vector<int> idx{7, 2, 5};
  const Eigen::MatrixXd s = build_cov_matrix(model, locs, idx);
  EXPECT_DOUBLE_EQ(s(0, 0), 1.0 + 1e-6);
  EXPECT_DOUBLE_EQ(s(1, 2), kernel(model, locs.point(2), locs.point(5)));
}
