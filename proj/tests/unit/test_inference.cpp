#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "vecchia/error.hpp"
#include "vecchia/inference.hpp"
#include "vecchia/optimize.hpp"

using namespace vecchia;

namespace {

FitData simulated(const CovarianceModel& model, std::size_t n, std::uint64_t seed) {
  FitData data;
  data.locs = oracle::uniform_points(n, 2, seed);
  data.y = oracle::gaussian_sample(oracle::covariance(model, data.locs), seed + 1);
  for (double& v : data.y) v += model.mean;
  return data;
}

// Silences warnings for the lifetime of the guard.
struct QuietWarnings {
  WarningHandler previous = set_warning_handler([](const std::string&) {});
  ~QuietWarnings() { set_warning_handler(previous); }
};

bool contains(const std::vector<Parameter>& v, Parameter p) { return std::find(v.begin(), v.end(), p) != v.end(); }

}  // namespace

TEST(Fit, ConfigValidation) {
  FitConfig config;
  EXPECT_NO_THROW(config.validate());
  config.schedule = {10, 10};
  EXPECT_THROW(config.validate(), InvalidArgument);
  config.schedule = {20, 10};
  EXPECT_THROW(config.validate(), InvalidArgument);
  config.schedule = {};
  EXPECT_THROW(config.validate(), InvalidArgument);
  config.schedule = {0, 5};
  EXPECT_THROW(config.validate(), InvalidArgument);
  config.schedule = {5};
  config.tolerance = 0.0;
  EXPECT_THROW(config.validate(), InvalidArgument);
}

TEST(Fit, DataValidation) {
  auto data = simulated(CovarianceModel::exponential(1.0, 0.1), 20, 1);
  FitConfig config;
  config.schedule = {5};
  data.y.pop_back();
  EXPECT_THROW(fit(data, config), InvalidArgument);
  data.y.push_back(0.0);
  config.free = {Parameter::range_time};
  EXPECT_THROW(fit(data, config), InvalidArgument);
}

TEST(Fit, DefaultInitialModel) {
  FitData data;
  data.locs = Locations(2, {0.0, 0.0, 3.0, 4.0, 0.0, 4.0});
  data.y = {1.0, 2.0, 3.0};
  const auto model = default_initial_model(data, KernelFamily::matern_isotropic);
  EXPECT_DOUBLE_EQ(model.variance, 1.0);
  EXPECT_DOUBLE_EQ(model.range, 1.25);
  EXPECT_DOUBLE_EQ(model.smoothness, 0.5);
  EXPECT_DOUBLE_EQ(model.nugget, 0.01);
}

TEST(Fit, EstimatesStabilizeAcrossNeighborCounts) {
  const auto truth = CovarianceModel::exponential(1.0, 0.1);
  const auto data = simulated(truth, 400, 11);
  FitConfig config;
  config.schedule = {30, 60};
  config.convergence = 0.0;
  config.free = {Parameter::variance, Parameter::range};
  config.initial = CovarianceModel::exponential(0.5, 0.3);
  const auto result = fit(data, config);
  ASSERT_EQ(result.stages.size(), 2u);
  EXPECT_EQ(result.final_m, 60u);
  for (const auto& stage : result.stages) {
    EXPECT_TRUE(stage.optimizer_converged);
    EXPECT_GE(stage.loglik, stage.initial_loglik);
    EXPECT_TRUE(stage.at_bound.empty());
    EXPECT_EQ(stage.beta.size(), 1);
    EXPECT_DOUBLE_EQ(stage.model.mean, stage.beta[0]);
  }
  EXPECT_LT(result.stages[1].relative_change, 0.05);
  EXPECT_EQ(result.perm, make_ordering(config.ordering, data.locs, config.seed));
}

TEST(Fit, StopsWhenEstimatesSettle) {
  const auto truth = CovarianceModel::matern(1.0, 0.1, 0.5, 0.05);
  const auto data = simulated(truth, 300, 21);
  FitConfig config;
  config.schedule = {5, 10, 20, 40, 80};
  config.free = {Parameter::variance, Parameter::range, Parameter::nugget};
  config.convergence = 0.02;
  const QuietWarnings quiet;
  const auto result = fit(data, config);
  ASSERT_FALSE(result.stages.empty());
  EXPECT_DOUBLE_EQ(result.stages[0].relative_change, 0.0);
  for (std::size_t k = 0; k < result.stages.size(); ++k) {
    EXPECT_GE(result.stages[k].loglik, result.stages[k].initial_loglik) << k;
    EXPECT_EQ(result.stages[k].m, config.schedule[k]);
    if (k + 1 < result.stages.size() && k > 0) EXPECT_GE(result.stages[k].relative_change, 0.02);
  }
  if (result.converged) {
    EXPECT_LT(result.final_stage().relative_change, 0.02);
    EXPECT_LT(result.stages.size(), config.schedule.size() + 1);
  }
  EXPECT_EQ(result.final_m, result.final_stage().m);
}

TEST(Fit, FullConditioningMatchesDenseMle) {
  const auto truth = CovarianceModel::matern(1.0, 0.15, 1.0, 0.0);
  const auto data = simulated(truth, 60, 31);
  FitConfig config;
  config.schedule = {59};
  config.free = {Parameter::variance, Parameter::range};
  config.estimate_mean = false;
  config.tolerance = 1e-9;
  config.initial = truth;
  const auto result = fit(data, config);
  ASSERT_EQ(result.stages.size(), 1u);

  // Dense log-likelihood maximized independently over the same parameters.
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), 60);
  auto negative = [&](const Eigen::VectorXd& u) {
    auto m = truth;
    m.variance = std::exp(u[0]);
    m.range = std::exp(u[1]);
    return -oracle::log_density(oracle::covariance(m, data.locs), y);
  };
  NelderMeadOptions options;
  options.x_tolerance = 1e-10;
  options.f_tolerance = 1e-14;
  const auto dense = nelder_mead(negative, Eigen::Vector2d(std::log(0.7), std::log(0.2)), options);
  const auto& stage = result.final_stage();
  EXPECT_NEAR(stage.model.variance, std::exp(dense.x[0]), 1e-4 * std::exp(dense.x[0]));
  EXPECT_NEAR(stage.model.range, std::exp(dense.x[1]), 1e-4 * std::exp(dense.x[1]));
  EXPECT_NEAR(stage.loglik, -dense.value, 1e-7 * std::abs(dense.value));
}

TEST(Fit, ConstantDataHitsTheBoundary) {
  FitData data;
  data.locs = oracle::uniform_points(50, 2, 41);
  data.y.assign(50, 3.0);
  FitConfig config;
  config.schedule = {10};
  config.free = {Parameter::variance, Parameter::range, Parameter::nugget};
  const QuietWarnings quiet;
  FitResult result;
  ASSERT_NO_THROW(result = fit(data, config));
  const auto& stage = result.final_stage();
  EXPECT_TRUE(contains(stage.at_bound, Parameter::variance));
  EXPECT_LT(stage.model.variance, 1e-6);
  EXPECT_NEAR(stage.model.mean, 3.0, 1e-9);
  EXPECT_TRUE(std::isfinite(stage.loglik));
}

TEST(Fit, LinearMeanIsProfiled) {
  const auto truth = CovarianceModel::exponential(0.5, 0.1);
  auto data = simulated(truth, 200, 51);
  Eigen::MatrixXd x(200, 2);
  for (Eigen::Index i = 0; i < 200; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = data.locs.coord(static_cast<std::size_t>(i), 0);
    data.y[static_cast<std::size_t>(i)] += 2.0 - 3.0 * x(i, 1);
  }
  data.covariates = x;
  FitConfig config;
  config.schedule = {15};
  config.free = {Parameter::variance, Parameter::range};
  const auto result = fit(data, config);
  const auto& stage = result.final_stage();
  ASSERT_EQ(stage.beta.size(), 2);
  EXPECT_NEAR(stage.beta[0], 2.0, 1.0);
  EXPECT_NEAR(stage.beta[1], -3.0, 1.5);

  const VecchiaStructure structure(data.locs, result.perm, StructureOptions{.m = 15});
  Eigen::VectorXd beta;
  const double ll = profiled_loglik(stage.model, data, structure, true, 0, &beta);
  EXPECT_NEAR(ll, stage.loglik, 1e-9 * std::abs(ll));
  EXPECT_LT((beta - stage.beta).cwiseAbs().maxCoeff(), 1e-12);
  const auto direct = profile_beta(structure.build(stage.model, data.locs),
                                   permute_rows(x, result.perm), result.perm.apply(data.y));
  EXPECT_NEAR(direct.loglik, ll, 1e-12 * std::abs(ll));
}

TEST(Fit, ProfiledLoglikMatchesConditionalOracle) {
  auto truth = CovarianceModel::matern(1.0, 0.2, 1.5, 0.1);
  truth.mean = 0.3;
  const auto data = simulated(truth, 120, 61);
  const VecchiaStructure structure(data.locs, order_ammd(data.locs), StructureOptions{.m = 7, .grouped = false});
  const double fixed = profiled_loglik(truth, data, structure, false);
  EXPECT_NEAR(fixed, oracle::vecchia_loglik(truth, data.locs, structure.permutation(), structure.sets(), data.y, 0.3),
              1e-9 * std::abs(fixed));
  Eigen::VectorXd beta;
  const double profiled = profiled_loglik(truth, data, structure, true, 0, &beta);
  ASSERT_EQ(beta.size(), 1);
  EXPECT_GE(profiled, fixed);
  auto shifted = truth;
  shifted.mean = beta[0];
  EXPECT_NEAR(profiled, profiled_loglik(shifted, data, structure, false), 1e-9 * std::abs(profiled));
}

TEST(Fit, SpaceTimeSmoke) {
  const std::size_t n = 150;
  auto base = oracle::uniform_points(n, 2, 71);
  std::vector<double> times(n);
  Philox rng(72, 0);
  for (double& t : times) t = 10.0 * rng.uniform();
  FitData data;
  data.locs = Locations(2, base.coords(), times);
  CovarianceModel truth{.family = KernelFamily::matern_spacetime, .variance = 1.0, .range = 0.2, .range_time = 3.0,
                        .smoothness = 0.5, .nugget = 0.05};
  data.y = oracle::gaussian_sample(oracle::covariance(truth, data.locs), 73);
  FitConfig config;
  config.family = KernelFamily::matern_spacetime;
  config.schedule = {10};
  config.distance = NeighborDistance::spacetime;
  config.free = {Parameter::variance, Parameter::range, Parameter::range_time};
  config.initial = truth;
  const QuietWarnings quiet;
  const auto result = fit(data, config);
  const auto& stage = result.final_stage();
  EXPECT_GE(stage.loglik, stage.initial_loglik);
  EXPECT_EQ(stage.model.family, KernelFamily::matern_spacetime);
  EXPECT_GT(stage.model.range_time, 0.3);
  EXPECT_LT(stage.model.range_time, 30.0);
}
