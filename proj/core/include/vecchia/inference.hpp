#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vecchia/covariance.hpp"
#include "vecchia/locations.hpp"
#include "vecchia/neighbors.hpp"
#include "vecchia/ordering.hpp"
#include "vecchia/structure.hpp"

namespace vecchia {

/// Observations: locations, responses and an optional design matrix
/// (rows in the same order as the locations).
struct FitData {
  Locations locs;
  std::vector<double> y;
  std::optional<Eigen::MatrixXd> covariates;
};

struct FitConfig {
  OrderingScheme ordering = OrderingScheme::ammd;
  std::uint64_t seed = 0;
  std::vector<std::size_t> schedule{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  bool grouped = true;
  NeighborDistance distance = NeighborDistance::spatial;

  /// Parameters to estimate; empty means every parameter of the family.
  std::vector<Parameter> free;
  /// Starting values and fixed parameter values. Defaults are derived from
  /// the data when absent.
  std::optional<CovarianceModel> initial;
  KernelFamily family = KernelFamily::matern_isotropic;
  /// Estimate a constant mean by generalized least squares when no design
  /// matrix is given; otherwise the model's mean is used as is.
  bool estimate_mean = true;

  double tolerance = 1e-6;  ///< simplex size on the log-parameter scale
  int max_evaluations = 2000;
  double convergence = 0.02;  ///< max relative change between stages
  int threads = 0;

  void validate() const;
};

struct FitStage {
  std::size_t m = 0;
  CovarianceModel model;
  Eigen::VectorXd beta;  ///< mean coefficients (empty when the mean is fixed)
  double loglik = 0.0;
  double initial_loglik = 0.0;  ///< at the warm start, same m
  int evaluations = 0;
  bool optimizer_converged = false;
  std::vector<Parameter> at_bound;  ///< free parameters pinned to a search bound
  double relative_change = 0.0;     ///< against the previous stage (0 for the first)
  double seconds = 0.0;
};

struct FitResult {
  std::vector<Parameter> free;
  std::vector<FitStage> stages;
  bool converged = false;
  std::size_t final_m = 0;
  Permutation perm;

  const FitStage& final_stage() const { return stages.back(); }
};

/// Starting values: sample variance, a quarter of the domain diameter,
/// smoothness 1/2, nugget 1% of the variance.
CovarianceModel default_initial_model(const FitData& data, KernelFamily family);

/// Vecchia log-likelihood of the data, profiling linear mean coefficients
/// when a design matrix is given (or a constant mean when `estimate_mean`).
/// beta_out receives the profiled coefficients.
double profiled_loglik(const CovarianceModel& model, const FitData& data, const VecchiaStructure& structure,
                       bool estimate_mean, int threads = 0, Eigen::VectorXd* beta_out = nullptr);

/// Maximum approximate-likelihood estimation over the neighbour schedule,
/// each stage warm-started from the previous estimate. Stops when the
/// largest relative parameter change between stages drops below
/// config.convergence.
FitResult fit(const FitData& data, const FitConfig& config);

}  // namespace vecchia
