#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "vecchia/covariance.hpp"
#include "vecchia/grouping.hpp"
#include "vecchia/neighbors.hpp"
#include "vecchia/ordering.hpp"

namespace vecchia {

/// Row-sparse lower-triangular approximation to the inverse Cholesky factor
/// of the permuted covariance. Row i holds the coefficients on its
/// conditioning set (ascending columns, i last); the last coefficient of
/// each row is the positive diagonal entry.
class SparseInverseCholesky {
 public:
  SparseInverseCholesky() = default;
  SparseInverseCholesky(std::vector<std::size_t> offsets, std::vector<int> columns, std::vector<double> values);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const int> row_columns(std::size_t i) const {
    return {columns_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  double diagonal(std::size_t i) const { return values_[offsets_[i + 1] - 1]; }

  /// Gamma * x.
  Eigen::VectorXd multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Gamma^{-1} z by forward substitution.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// log det Gamma = sum_i log Gamma_ii.
  double log_det() const;
  Eigen::MatrixXd to_dense() const;

  friend bool operator==(const SparseInverseCholesky&, const SparseInverseCholesky&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<int> columns_;
  std::vector<double> values_;
};

/// Non-owning handle to the two conditioning structures: plain neighbour
/// sets (one factorization per row) or a block partition (one per block).
class ConditioningRef {
 public:
  ConditioningRef(const NeighborSets& sets) : target_(&sets) {}       // NOLINT(google-explicit-constructor)
  ConditioningRef(const BlockPartition& blocks) : target_(&blocks) {}  // NOLINT(google-explicit-constructor)

  bool grouped() const { return std::holds_alternative<const BlockPartition*>(target_); }
  std::size_t size() const;
  const NeighborSets& sets() const { return *std::get<const NeighborSets*>(target_); }
  const BlockPartition& blocks() const { return *std::get<const BlockPartition*>(target_); }

 private:
  std::variant<const NeighborSets*, const BlockPartition*> target_;
};

/// Builds Gamma for `model` at locations locs[perm[0]], locs[perm[1]], ...
///
/// Ungrouped: for each row i, factor the covariance of (J_i \ {i}, i) and
/// take the last row of its inverse Cholesky factor. Grouped: factor the
/// covariance of U_k once per block and read off the row of every member.
/// Throws NumericalError naming the failing row or block when a local
/// covariance is not positive definite. threads <= 0 uses the default.
SparseInverseCholesky build_gamma_tilde(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        const NeighborSets& sets, int threads = 0);
SparseInverseCholesky build_gamma_tilde(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        const BlockPartition& blocks, int threads = 0);
SparseInverseCholesky build_gamma_tilde(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        ConditioningRef conditioning, int threads = 0);

/// -(n/2) log 2pi + log det Gamma - |Gamma (y - mean)|^2 / 2, with y given in
/// permuted order.
double loglik(const SparseInverseCholesky& gamma, std::span<const double> y_permuted, double mean = 0.0);
/// Same with an arbitrary permuted mean vector.
double loglik(const SparseInverseCholesky& gamma, const Eigen::Ref<const Eigen::VectorXd>& residual_permuted);

struct ProfileResult {
  Eigen::VectorXd beta;
  double loglik = 0.0;
};

/// Generalized least squares for a linear mean: beta minimizes
/// |Gamma (y - X beta)|^2. X and y are in permuted order. Throws
/// NumericalError when Gamma X is rank deficient.
ProfileResult profile_beta(const SparseInverseCholesky& gamma, const Eigen::Ref<const Eigen::MatrixXd>& x_permuted,
                           std::span<const double> y_permuted);

/// Rows of X reordered by perm (row i of the result is row perm[i] of X).
Eigen::MatrixXd permute_rows(const Eigen::Ref<const Eigen::MatrixXd>& x, const Permutation& perm);

}  // namespace vecchia
