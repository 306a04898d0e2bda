#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "vecchia/error.hpp"
#include "vecchia/optimize.hpp"

using namespace vecchia;

TEST(NelderMead, Rosenbrock) {
  auto f = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  NelderMeadOptions options;
  options.x_tolerance = 1e-8;
  options.max_evaluations = 5000;
  const auto r = nelder_mead(f, Eigen::Vector2d(-1.2, 1.0), options);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(NelderMead, QuadraticInFourDimensions) {
  const Eigen::Vector4d target(1.0, -2.0, 0.5, 3.0);
  auto f = [&](const Eigen::VectorXd& x) { return (x - target).squaredNorm() + 0.3 * (x[0] - target[0]) * (x[1] - target[1]); };
  const auto r = nelder_mead(f, Eigen::Vector4d::Zero());
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.x - target).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(NelderMead, InfeasibleRegionTreatedAsInfinite) {
  auto f = [](const Eigen::VectorXd& x) {
    if (x[0] < 0.5) return std::numeric_limits<double>::infinity();
    return (x[0] - 0.2) * (x[0] - 0.2);
  };
  const auto r = nelder_mead(f, Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_NEAR(r.x[0], 0.5, 1e-5);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(NelderMead, EvaluationLimitAndBadStart) {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  NelderMeadOptions options;
  options.max_evaluations = 10;
  const auto r = nelder_mead(f, Eigen::Vector2d(5.0, 5.0), options);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.evaluations, 14);
  auto bad = [](const Eigen::VectorXd&) { return std::nan(""); };
  EXPECT_THROW(nelder_mead(bad, Eigen::Vector2d(0.0, 0.0)), NumericalError);
}
