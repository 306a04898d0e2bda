#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vecchia/covariance.hpp"
#include "vecchia/inverse_cholesky.hpp"
#include "vecchia/locations.hpp"
#include "vecchia/ordering.hpp"

namespace vecchia {

inline constexpr std::size_t default_oracle_cap = 4096;

/// Dense multivariate normal N(mean, covariance) with its Cholesky factor.
class DenseGaussian {
 public:
  explicit DenseGaussian(Eigen::MatrixXd covariance, std::size_t cap = default_oracle_cap);
  DenseGaussian(const CovarianceModel& model, const Locations& locs, std::size_t cap = default_oracle_cap);

  std::size_t size() const { return static_cast<std::size_t>(covariance_.rows()); }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const { return llt_; }
  double log_det() const { return log_det_; }

  double log_density(std::span<const double> y, double mean = 0.0) const;
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& residual) const;

 private:
  Eigen::MatrixXd covariance_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

/// KL(N(0, sigma0) || N(0, sigma1)).
double kl_divergence_general(const Eigen::MatrixXd& sigma0, const Eigen::MatrixXd& sigma1);

/// KL from the exact model to its Vecchia approximation with the same
/// parameters. Both quadratic terms equal n, leaving
/// (-2 sum log Gamma_ii - log det Sigma0) / 2.
double kl_divergence_vecchia(const SparseInverseCholesky& gamma, double log_det_sigma0);
double kl_divergence_vecchia(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                             ConditioningRef conditioning, int threads = 0);

/// Sigma-tilde = (Gamma^T Gamma)^{-1}, dense, in the permuted frame.
Eigen::MatrixXd implied_covariance(const SparseInverseCholesky& gamma);

struct InformationOptions {
  double step = 1e-4;  ///< central-difference step on the log-parameter scale
  int threads = 0;
  std::size_t cap = default_oracle_cap;
};

/// Information matrices on the natural parameter scale, in the order of
/// `parameters`.
struct InformationMatrices {
  std::vector<Parameter> parameters;
  Eigen::MatrixXd fisher;            ///< I(theta)
  Eigen::VectorXd expected_score;    ///< E grad l~
  Eigen::MatrixXd expected_hessian;  ///< E grad^2 l~
  Eigen::MatrixXd score_covariance;  ///< E (grad l~)(grad l~)^T
  Eigen::MatrixXd godambe;           ///< H(theta)
  Eigen::VectorXd relative_efficiency;  ///< diag(I^{-1}) / diag(H^{-1})
};

/// Expected Vecchia log-likelihood E_truth[l~(model)] = c - tr(Q Sigma0)/2
/// with Q = Gamma^T Gamma built at `model` and Sigma0 the covariance of
/// `truth`, in the permuted frame.
double expected_vecchia_loglik(const CovarianceModel& model, const Eigen::MatrixXd& sigma0_permuted,
                               const Locations& locs, const Permutation& perm, ConditioningRef conditioning,
                               int threads = 0);

/// Godambe information of the Vecchia likelihood at the true parameters, with
/// the Fisher information of the exact likelihood for comparison.
/// Derivatives of Gamma are central differences on the log scale. At the
/// true parameters each row g_i of Gamma satisfies g_i Sigma0 = e_i / g_ii on
/// its conditioning set, which reduces the expected Hessian to first
/// derivatives: E d2 l~ = -sum_i (da g_ii db g_ii / g_ii^2 + da g_i Sigma0 db g_i^T).
InformationMatrices godambe_information(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        ConditioningRef conditioning, std::span<const Parameter> parameters,
                                        const InformationOptions& options = {});

/// Block labels from a tiling of the bounding box into tiles[axis] equal
/// slabs per axis.
std::vector<int> tile_labels(const Locations& locs, std::span<const std::size_t> tiles);

/// KL to the approximation that keeps only the covariance within blocks of
/// equal label: (sum_b log det Sigma_bb - log det Sigma) / 2.
double block_independent_kl(const Eigen::MatrixXd& sigma0, std::span<const int> labels);
double baseline_block_independent(const CovarianceModel& model, const Locations& locs,
                                  std::span<const std::size_t> tiles, std::size_t cap = default_oracle_cap);

/// Wendland-1 taper (1 - r/gamma)_+^4 (1 + 4 r/gamma).
double wendland1(double r, double taper_range);

struct TaperResult {
  double kl = 0.0;
  double variance = 0.0;  ///< variance of the tapered model
  double range = 0.0;     ///< range of the tapered model
  int evaluations = 0;
};

/// KL to the tapered Matern (free variance and range, other parameters as in
/// `model`). With `optimize`, variance and range are chosen to minimize the
/// KL; otherwise the true values are used.
TaperResult baseline_taper(const CovarianceModel& model, const Locations& locs, double taper_range, bool optimize,
                           std::size_t cap = default_oracle_cap);

}  // namespace vecchia
