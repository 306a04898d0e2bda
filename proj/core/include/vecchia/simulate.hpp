#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vecchia/covariance.hpp"
#include "vecchia/inverse_cholesky.hpp"
#include "vecchia/locations.hpp"
#include "vecchia/neighbors.hpp"
#include "vecchia/ordering.hpp"

namespace vecchia {

/// Standard normal vector of length n from the simulation stream of `seed`
/// for ensemble member `member`.
Eigen::VectorXd standard_normal(std::size_t n, std::uint64_t seed, std::uint64_t member = 0);

/// Zero-mean draw Y = Gamma^{-1} Z in the permuted frame.
Eigen::VectorXd unconditional_draw(const SparseInverseCholesky& gamma, std::uint64_t seed, std::uint64_t member = 0);

struct PredictionOptions {
  std::size_t m = 30;                      ///< neighbours of observed points
  std::optional<std::size_t> m_prediction;  ///< neighbours of prediction points (default: m)
  bool grouped = true;
  OrderingScheme prediction_ordering = OrderingScheme::random;
  std::uint64_t seed = 0;
  NeighborDistance distance = NeighborDistance::spatial;
  int threads = 0;
};

/// Joint Vecchia approximation of observed and prediction points, observed
/// points first. In the joint permuted frame
///   Gamma = [ G11 0 ; G21 G22 ],
/// and E(Y2 | Y1) = -G22^{-1} G21 Y1.
class PredictionSetup {
 public:
  /// observed_perm orders the observed points; prediction points follow in
  /// options.prediction_ordering (randomness from options.seed).
  PredictionSetup(const CovarianceModel& model, const Locations& observed, const Permutation& observed_perm,
                  const Locations& prediction, const PredictionOptions& options = {});
  /// Explicit joint ordering and neighbour sets; the first n_observed
  /// positions of joint_perm must hold indices below n_observed.
  PredictionSetup(const CovarianceModel& model, const Locations& joint, std::size_t n_observed, Permutation joint_perm,
                  const NeighborSets& sets, bool grouped, int threads = 0);

  std::size_t observed_count() const { return n_observed_; }
  std::size_t prediction_count() const { return joint_perm_.size() - n_observed_; }
  const CovarianceModel& model() const { return model_; }
  const Permutation& joint_permutation() const { return joint_perm_; }
  const SparseInverseCholesky& gamma() const { return gamma_; }

  /// Kriging mean at the prediction points (input and output in the
  /// caller's original order).
  Eigen::VectorXd conditional_expectation(std::span<const double> y_observed) const;
  /// One conditional draw: one unconditional joint draw plus one
  /// conditional expectation.
  Eigen::VectorXd conditional_draw(std::span<const double> y_observed, std::uint64_t seed,
                                   std::uint64_t member = 0) const;

 private:
  void check_layout() const;
  // -G22^{-1} G21 r for r in the permuted observed frame, result permuted.
  Eigen::VectorXd krige_permuted(const Eigen::Ref<const Eigen::VectorXd>& residual) const;
  Eigen::VectorXd observed_residual(std::span<const double> y_observed) const;
  Eigen::VectorXd unpermute_prediction(const Eigen::Ref<const Eigen::VectorXd>& permuted) const;

  CovarianceModel model_;
  std::size_t n_observed_ = 0;
  Permutation joint_perm_;
  SparseInverseCholesky gamma_;
};

struct EnsembleResult {
  Eigen::VectorXd mean;  ///< conditional expectation
  Eigen::VectorXd sd;    ///< sample standard deviation across members
  Eigen::MatrixXd draws;  ///< prediction points x members, when kept
};

/// `members` conditional draws with member seeds derived from `seed`.
/// Members run concurrently; the result does not depend on the thread count.
EnsembleResult conditional_ensemble(const PredictionSetup& setup, std::span<const double> y_observed,
                                    std::size_t members, std::uint64_t seed, bool keep_draws = false,
                                    int threads = 0);

}  // namespace vecchia
