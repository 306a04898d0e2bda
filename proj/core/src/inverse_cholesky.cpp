#include "vecchia/inverse_cholesky.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "vecchia/error.hpp"
#include "vecchia/parallel.hpp"

namespace vecchia {

SparseInverseCholesky::SparseInverseCholesky(std::vector<std::size_t> offsets, std::vector<int> columns,
                                             std::vector<double> values)
    : offsets_(std::move(offsets)), columns_(std::move(columns)), values_(std::move(values)) {
  if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != columns_.size() ||
      columns_.size() != values_.size()) {
    throw InvalidArgument("inconsistent sparse row layout");
  }
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    if (offsets_[i + 1] <= offsets_[i]) throw InvalidArgument("empty row in inverse Cholesky factor");
    const auto cols = row_columns(i);
    if (static_cast<std::size_t>(cols.back()) != i) throw InvalidArgument("row must end on its diagonal");
    if (!(diagonal(i) > 0.0)) throw InvalidArgument("diagonal must be positive");
  }
}

Eigen::VectorXd SparseInverseCholesky::multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const std::size_t n = size();
  if (static_cast<std::size_t>(x.size()) != n) throw InvalidArgument("vector length differs from factor size");
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    double sum = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) sum += vals[k] * x[cols[k]];
    out[static_cast<Eigen::Index>(i)] = sum;
  }
  return out;
}

Eigen::VectorXd SparseInverseCholesky::solve(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  const std::size_t n = size();
  if (static_cast<std::size_t>(z.size()) != n) throw InvalidArgument("vector length differs from factor size");
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    double sum = z[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k + 1 < cols.size(); ++k) sum -= vals[k] * y[cols[k]];
    y[static_cast<Eigen::Index>(i)] = sum / vals.back();
  }
  return y;
}

double SparseInverseCholesky::log_det() const {
  // Neumaier summation: KL values are small differences of large log-dets.
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double term = std::log(diagonal(i));
    const double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + carry;
}

Eigen::MatrixXd SparseInverseCholesky::to_dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) dense(static_cast<Eigen::Index>(i), cols[k]) = vals[k];
  }
  return dense;
}

std::size_t ConditioningRef::size() const { return grouped() ? blocks().size() : sets().size(); }

namespace {

struct Workspace {
  Eigen::MatrixXd cov;  // A^k, factored in place
  Eigen::VectorXd row;
  std::vector<int> original;

  void reserve(Eigen::Index size) {
    if (cov.rows() < size) {
      cov.resize(size, size);
      row.resize(size);
    }
  }
};

void check_build_inputs(const CovarianceModel& model, const Locations& locs, const Permutation& perm, std::size_t n) {
  model.validate();
  if (perm.size() != locs.size()) throw InvalidArgument("permutation size differs from location count");
  if (n != locs.size()) throw InvalidArgument("conditioning sets differ in size from location count");
  if (model.family == KernelFamily::matern_spacetime && !locs.has_time()) {
    throw InvalidArgument("space-time kernel needs time coordinates");
  }
}

// Covariance of the positions in `positions` (ascending), factored in place.
// Returns false when the matrix is not numerically positive definite.
bool factor_local(const CovarianceKernel& kernel, const Locations& locs, const Permutation& perm,
                  std::span<const int> positions, Workspace& ws, bool& duplicate) {
  const auto u = static_cast<Eigen::Index>(positions.size());
  ws.reserve(u);
  ws.original.resize(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) ws.original[k] = perm[static_cast<std::size_t>(positions[k])];
  auto block = ws.cov.topLeftCorner(u, u);
  duplicate = fill_covariance_lower(kernel, locs, ws.original, block) || duplicate;
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(block);
  return llt.info() == Eigen::Success;
}

// Row r of the inverse of the lower Cholesky factor held in ws.cov; entries
// 0..r, written to out.
void inverse_factor_row(Workspace& ws, Eigen::Index r, double* out) {
  auto x = ws.row.head(r + 1);
  x.setZero();
  x[r] = 1.0;
  ws.cov.topLeftCorner(r + 1, r + 1).triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  for (Eigen::Index k = 0; k <= r; ++k) out[k] = x[k];
}

[[noreturn]] void throw_factorization_failure(const CovarianceModel& model, const std::string& where) {
  std::ostringstream msg;
  msg << "covariance of " << where << " is not positive definite (variance=" << model.variance
      << ", range=" << model.range << ", smoothness=" << model.smoothness << ", nugget=" << model.nugget
      << "); duplicate locations or extreme parameters are likely, consider a nugget or jitter";
  throw NumericalError(msg.str());
}

}  // namespace

SparseInverseCholesky build_gamma_tilde(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        const NeighborSets& sets, int threads) {
  check_build_inputs(model, locs, perm, sets.size());
  const CovarianceKernel kernel(model);
  const std::size_t n = sets.size();
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + sets.count(i);
  std::vector<int> columns(offsets[n]);
  std::vector<double> values(offsets[n]);

  const int workers = threads <= 0 ? default_thread_count() : threads;
  std::vector<Workspace> spaces(static_cast<std::size_t>(workers));
  std::vector<char> duplicate(static_cast<std::size_t>(workers), 0);
  parallel_for(n, workers, 64, [&](int worker, std::size_t begin, std::size_t end) {
    Workspace& ws = spaces[static_cast<std::size_t>(worker)];
    bool dup = false;
    for (std::size_t i = begin; i < end; ++i) {
      const auto set = sets.set(i);
      if (!factor_local(kernel, locs, perm, set, ws, dup)) {
        throw_factorization_failure(model, "the conditioning set of row " + std::to_string(i));
      }
      std::copy(set.begin(), set.end(), columns.begin() + static_cast<std::ptrdiff_t>(offsets[i]));
      inverse_factor_row(ws, static_cast<Eigen::Index>(set.size()) - 1, values.data() + offsets[i]);
    }
    if (dup) duplicate[static_cast<std::size_t>(worker)] = 1;
  });
  if (std::find(duplicate.begin(), duplicate.end(), 1) != duplicate.end()) {
    warn("coincident locations with zero nugget in a conditioning set");
  }
  return SparseInverseCholesky(std::move(offsets), std::move(columns), std::move(values));
}

SparseInverseCholesky build_gamma_tilde(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        const BlockPartition& blocks, int threads) {
  check_build_inputs(model, locs, perm, blocks.size());
  const CovarianceKernel kernel(model);
  const std::size_t n = blocks.size();

  // Row i of a block member is the prefix of U_k ending at i.
  std::vector<std::size_t> row_length(n, 0);
  for (std::size_t k = 0; k < blocks.block_count(); ++k) {
    const auto u = blocks.union_set(k);
    for (int member : blocks.block(k)) {
      row_length[static_cast<std::size_t>(member)] =
          static_cast<std::size_t>(std::lower_bound(u.begin(), u.end(), member) - u.begin()) + 1;
    }
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + row_length[i];
  std::vector<int> columns(offsets[n]);
  std::vector<double> values(offsets[n]);

  const int workers = threads <= 0 ? default_thread_count() : threads;
  std::vector<Workspace> spaces(static_cast<std::size_t>(workers));
  std::vector<char> duplicate(static_cast<std::size_t>(workers), 0);
  parallel_for(blocks.block_count(), workers, 16, [&](int worker, std::size_t begin, std::size_t end) {
    Workspace& ws = spaces[static_cast<std::size_t>(worker)];
    bool dup = false;
    for (std::size_t k = begin; k < end; ++k) {
      const auto u = blocks.union_set(k);
      if (!factor_local(kernel, locs, perm, u, ws, dup)) {
        throw_factorization_failure(model, "block " + std::to_string(k) + " (" + std::to_string(u.size()) + " points)");
      }
      for (int member : blocks.block(k)) {
        const auto i = static_cast<std::size_t>(member);
        const std::size_t len = row_length[i];
        std::copy(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(len),
                  columns.begin() + static_cast<std::ptrdiff_t>(offsets[i]));
        inverse_factor_row(ws, static_cast<Eigen::Index>(len) - 1, values.data() + offsets[i]);
      }
    }
    if (dup) duplicate[static_cast<std::size_t>(worker)] = 1;
  });
  if (std::find(duplicate.begin(), duplicate.end(), 1) != duplicate.end()) {
    warn("coincident locations with zero nugget in a conditioning block");
  }
  return SparseInverseCholesky(std::move(offsets), std::move(columns), std::move(values));
}

SparseInverseCholesky build_gamma_tilde(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        ConditioningRef conditioning, int threads) {
  if (conditioning.grouped()) return build_gamma_tilde(model, locs, perm, conditioning.blocks(), threads);
  return build_gamma_tilde(model, locs, perm, conditioning.sets(), threads);
}

double loglik(const SparseInverseCholesky& gamma, const Eigen::Ref<const Eigen::VectorXd>& residual_permuted) {
  const Eigen::VectorXd z = gamma.multiply(residual_permuted);
  const double n = static_cast<double>(gamma.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) + gamma.log_det() - 0.5 * z.squaredNorm();
}

double loglik(const SparseInverseCholesky& gamma, std::span<const double> y_permuted, double mean) {
  if (y_permuted.size() != gamma.size()) throw InvalidArgument("data length differs from factor size");
  Eigen::VectorXd r(static_cast<Eigen::Index>(y_permuted.size()));
  for (std::size_t i = 0; i < y_permuted.size(); ++i) r[static_cast<Eigen::Index>(i)] = y_permuted[i] - mean;
  return loglik(gamma, r);
}

ProfileResult profile_beta(const SparseInverseCholesky& gamma, const Eigen::Ref<const Eigen::MatrixXd>& x_permuted,
                           std::span<const double> y_permuted) {
  const auto n = static_cast<Eigen::Index>(gamma.size());
  if (x_permuted.rows() != n || static_cast<Eigen::Index>(y_permuted.size()) != n) {
    throw InvalidArgument("design matrix or data length differs from factor size");
  }
  if (x_permuted.cols() == 0) throw InvalidArgument("design matrix has no columns");
  const Eigen::Map<const Eigen::VectorXd> y(y_permuted.data(), n);
  Eigen::MatrixXd gx(n, x_permuted.cols());
  for (Eigen::Index c = 0; c < x_permuted.cols(); ++c) gx.col(c) = gamma.multiply(x_permuted.col(c));
  const Eigen::VectorXd gy = gamma.multiply(y);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gx);
  if (qr.rank() < x_permuted.cols()) throw NumericalError("transformed design matrix is rank deficient");
  ProfileResult result;
  result.beta = qr.solve(gy);
  result.loglik = loglik(gamma, Eigen::VectorXd(y - x_permuted * result.beta));
  return result;
}

Eigen::MatrixXd permute_rows(const Eigen::Ref<const Eigen::MatrixXd>& x, const Permutation& perm) {
  if (static_cast<std::size_t>(x.rows()) != perm.size()) throw InvalidArgument("row count differs from permutation");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
  return out;
}

}  // namespace vecchia
