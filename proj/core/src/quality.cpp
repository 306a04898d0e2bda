#include "vecchia/quality.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "vecchia/error.hpp"
#include "vecchia/optimize.hpp"

namespace vecchia {

namespace {

double log_det_from_factor(const Eigen::MatrixXd& lower) {
  double sum = 0.0;
  double carry = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double term = 2.0 * std::log(lower(i, i));
    const double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + carry;
}

void check_cap(std::size_t n, std::size_t cap) {
  if (n > cap) {
    throw InvalidArgument("dense oracle limited to " + std::to_string(cap) + " points, got " + std::to_string(n));
  }
}

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  return llt;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse(const SparseInverseCholesky& gamma) {
  const auto n = static_cast<Eigen::Index>(gamma.size());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(gamma.nonzeros());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const auto cols = gamma.row_columns(i);
    const auto vals = gamma.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) entries.emplace_back(static_cast<int>(i), cols[k], vals[k]);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> out(n, n);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

CovarianceModel scaled(const CovarianceModel& model, Parameter p, double log_step) {
  CovarianceModel out = model;
  out.set(p, model.get(p) * std::exp(log_step));
  return out;
}

}  // namespace

DenseGaussian::DenseGaussian(Eigen::MatrixXd covariance, std::size_t cap) : covariance_(std::move(covariance)) {
  if (covariance_.rows() != covariance_.cols()) throw InvalidArgument("covariance must be square");
  check_cap(size(), cap);
  llt_.compute(covariance_);
  if (llt_.info() != Eigen::Success) throw NumericalError("dense covariance is not positive definite");
  log_det_ = log_det_from_factor(llt_.matrixLLT());
}

DenseGaussian::DenseGaussian(const CovarianceModel& model, const Locations& locs, std::size_t cap)
    : DenseGaussian((check_cap(locs.size(), cap), build_cov_matrix(model, locs)), cap) {}

double DenseGaussian::log_density(const Eigen::Ref<const Eigen::VectorXd>& residual) const {
  if (static_cast<std::size_t>(residual.size()) != size()) throw InvalidArgument("data length differs from dimension");
  const Eigen::VectorXd z = llt_.matrixL().solve(residual);
  const double n = static_cast<double>(size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_ - 0.5 * z.squaredNorm();
}

double DenseGaussian::log_density(std::span<const double> y, double mean) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) r[static_cast<Eigen::Index>(i)] = y[i] - mean;
  return log_density(r);
}

double kl_divergence_general(const Eigen::MatrixXd& sigma0, const Eigen::MatrixXd& sigma1) {
  if (sigma0.rows() != sigma0.cols() || sigma1.rows() != sigma1.cols() || sigma0.rows() != sigma1.rows()) {
    throw InvalidArgument("covariance matrices must be square and of equal size");
  }
  const auto llt0 = factor(sigma0, "first covariance");
  const auto llt1 = factor(sigma1, "second covariance");
  const Eigen::MatrixXd l0 = llt0.matrixL();
  const Eigen::MatrixXd x = llt1.matrixL().solve(l0);
  const double n = static_cast<double>(sigma0.rows());
  return 0.5 * (x.squaredNorm() - n + log_det_from_factor(llt1.matrixLLT()) - log_det_from_factor(llt0.matrixLLT()));
}

double kl_divergence_vecchia(const SparseInverseCholesky& gamma, double log_det_sigma0) {
  return 0.5 * (-2.0 * gamma.log_det() - log_det_sigma0);
}

double kl_divergence_vecchia(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                             ConditioningRef conditioning, int threads) {
  const DenseGaussian exact(model, locs);
  return kl_divergence_vecchia(build_gamma_tilde(model, locs, perm, conditioning, threads), exact.log_det());
}

Eigen::MatrixXd implied_covariance(const SparseInverseCholesky& gamma) {
  const Eigen::MatrixXd g = gamma.to_dense();
  const Eigen::MatrixXd inv =
      g.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  return inv * inv.transpose();
}

double expected_vecchia_loglik(const CovarianceModel& model, const Eigen::MatrixXd& sigma0_permuted,
                               const Locations& locs, const Permutation& perm, ConditioningRef conditioning,
                               int threads) {
  const SparseInverseCholesky gamma = build_gamma_tilde(model, locs, perm, conditioning, threads);
  double quad = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const auto cols = gamma.row_columns(i);
    const auto vals = gamma.row_values(i);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) quad += vals[a] * sigma0_permuted(cols[a], cols[b]) * vals[b];
    }
  }
  const double n = static_cast<double>(gamma.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) + gamma.log_det() - 0.5 * quad;
}

InformationMatrices godambe_information(const CovarianceModel& model, const Locations& locs, const Permutation& perm,
                                        ConditioningRef conditioning, std::span<const Parameter> parameters,
                                        const InformationOptions& options) {
  const std::size_t n = locs.size();
  check_cap(n, options.cap);
  if (parameters.empty()) throw InvalidArgument("no parameters requested");
  if (!(options.step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  model.validate();
  const auto p = static_cast<Eigen::Index>(parameters.size());
  const double h = options.step;

  const Eigen::MatrixXd sigma0 = build_cov_matrix(model, locs, perm.forward());
  const auto llt0 = factor(sigma0, "true covariance");
  const SparseInverseCholesky gamma = build_gamma_tilde(model, locs, perm, conditioning, options.threads);

  // Log-scale derivatives of Gamma (same sparsity) and of Sigma0.
  std::vector<std::vector<double>> d_gamma(parameters.size());
  std::vector<Eigen::MatrixXd> sigma_inv_d_sigma(parameters.size());
  for (std::size_t a = 0; a < parameters.size(); ++a) {
    if (model.get(parameters[a]) <= 0.0) {
      throw InvalidArgument("parameter " + std::string(to_string(parameters[a])) + " must be positive");
    }
    const CovarianceModel up = scaled(model, parameters[a], h);
    const CovarianceModel down = scaled(model, parameters[a], -h);
    const SparseInverseCholesky g_up = build_gamma_tilde(up, locs, perm, conditioning, options.threads);
    const SparseInverseCholesky g_down = build_gamma_tilde(down, locs, perm, conditioning, options.threads);
    d_gamma[a].resize(gamma.nonzeros());
    for (std::size_t i = 0; i < n; ++i) {
      const auto vu = g_up.row_values(i);
      const auto vd = g_down.row_values(i);
      const std::size_t offset = static_cast<std::size_t>(gamma.row_values(i).data() - gamma.row_values(0).data());
      for (std::size_t k = 0; k < vu.size(); ++k) d_gamma[a][offset + k] = (vu[k] - vd[k]) / (2.0 * h);
    }
    const Eigen::MatrixXd d_sigma =
        (build_cov_matrix(up, locs, perm.forward()) - build_cov_matrix(down, locs, perm.forward())) / (2.0 * h);
    sigma_inv_d_sigma[a] = llt0.solve(d_sigma);
  }

  Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(p, p);
  const double* base = gamma.row_values(0).data();
  Eigen::MatrixXd local;
  Eigen::MatrixXd dg;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = gamma.row_columns(i);
    const auto vals = gamma.row_values(i);
    const auto len = static_cast<Eigen::Index>(cols.size());
    const std::size_t offset = static_cast<std::size_t>(vals.data() - base);
    local.resize(len, len);
    for (Eigen::Index r = 0; r < len; ++r) {
      for (Eigen::Index c = 0; c < len; ++c) local(r, c) = sigma0(cols[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(c)]);
    }
    dg.resize(len, p);
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index k = 0; k < len; ++k) dg(k, a) = d_gamma[static_cast<std::size_t>(a)][offset + static_cast<std::size_t>(k)];
    }
    const Eigen::Map<const Eigen::VectorXd> g(vals.data(), len);
    const double gii = vals.back();
    const Eigen::VectorXd dgii = dg.row(len - 1).transpose();
    score += dgii / gii - dg.transpose() * (local * g);
    hessian -= dgii * dgii.transpose() / (gii * gii) + dg.transpose() * local * dg;
  }

  // Cov of the quadratic forms y^T dQ_a y / 2 is tr(dQ_a S dQ_b S) / 2 with
  // dQ_a = dG_a^T G + G^T dG_a.
  const auto g_sparse = to_sparse(gamma);
  const Eigen::MatrixXd g_sigma = g_sparse * sigma0;
  std::vector<Eigen::MatrixXd> dq_sigma(parameters.size());
  for (std::size_t a = 0; a < parameters.size(); ++a) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(gamma.nonzeros());
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int c : gamma.row_columns(i)) entries.emplace_back(static_cast<int>(i), c, d_gamma[a][k++]);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> dg_sparse(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    dg_sparse.setFromTriplets(entries.begin(), entries.end());
    const Eigen::MatrixXd dg_sigma = dg_sparse * sigma0;
    dq_sigma[a] = Eigen::MatrixXd(dg_sparse.transpose() * g_sigma) + Eigen::MatrixXd(g_sparse.transpose() * dg_sigma);
  }
  Eigen::MatrixXd score_cov(p, p);
  Eigen::MatrixXd fisher(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      const double tr_q = (dq_sigma[ua].array() * dq_sigma[ub].transpose().array()).sum();
      score_cov(a, b) = score_cov(b, a) = score[a] * score[b] + 0.5 * tr_q;
      const double tr_s = (sigma_inv_d_sigma[ua].array() * sigma_inv_d_sigma[ub].transpose().array()).sum();
      fisher(a, b) = fisher(b, a) = 0.5 * tr_s;
    }
  }

  // Back to the natural scale: d/d theta = (1/theta) d/d log theta.
  Eigen::VectorXd inv_theta(p);
  for (Eigen::Index a = 0; a < p; ++a) inv_theta[a] = 1.0 / model.get(parameters[static_cast<std::size_t>(a)]);
  const auto scale = inv_theta.asDiagonal();

  InformationMatrices out;
  out.parameters.assign(parameters.begin(), parameters.end());
  out.expected_score = scale * score;
  out.expected_hessian = scale * hessian * scale;
  out.score_covariance = scale * score_cov * scale;
  out.fisher = scale * fisher * scale;

  Eigen::LDLT<Eigen::MatrixXd> cov_factor(out.score_covariance);
  if (cov_factor.info() != Eigen::Success || !cov_factor.isPositive() ||
      cov_factor.vectorD().minCoeff() <= 1e-14 * cov_factor.vectorD().maxCoeff()) {
    throw NumericalError("score covariance is near singular");
  }
  out.godambe = out.expected_hessian * cov_factor.solve(out.expected_hessian);
  out.godambe = 0.5 * (out.godambe + out.godambe.transpose()).eval();

  const Eigen::MatrixXd fisher_inv = out.fisher.inverse();
  const Eigen::MatrixXd godambe_inv = out.godambe.inverse();
  out.relative_efficiency = fisher_inv.diagonal().cwiseQuotient(godambe_inv.diagonal());
  return out;
}

std::vector<int> tile_labels(const Locations& locs, std::span<const std::size_t> tiles) {
  if (tiles.size() != locs.dim()) throw InvalidArgument("one tile count per coordinate axis required");
  std::vector<double> lo(locs.dim(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(locs.dim(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    for (std::size_t a = 0; a < locs.dim(); ++a) {
      lo[a] = std::min(lo[a], locs.coord(i, a));
      hi[a] = std::max(hi[a], locs.coord(i, a));
    }
  }
  std::vector<int> labels(locs.size(), 0);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    std::size_t label = 0;
    for (std::size_t a = locs.dim(); a-- > 0;) {
      if (tiles[a] == 0) throw InvalidArgument("tile counts must be positive");
      std::size_t k = 0;
      if (hi[a] > lo[a]) {
        const double t = (locs.coord(i, a) - lo[a]) / (hi[a] - lo[a]) * static_cast<double>(tiles[a]);
        k = std::min(tiles[a] - 1, static_cast<std::size_t>(std::max(0.0, std::floor(t))));
      }
      label = label * tiles[a] + k;
    }
    labels[i] = static_cast<int>(label);
  }
  return labels;
}

double block_independent_kl(const Eigen::MatrixXd& sigma0, std::span<const int> labels) {
  if (static_cast<std::size_t>(sigma0.rows()) != labels.size()) throw InvalidArgument("one label per row required");
  const auto llt0 = factor(sigma0, "covariance");
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  double blocks = 0.0;
  for (const auto& [label, members] : groups) {
    const auto m = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) sub(r, c) = sigma0(members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(c)]);
    }
    blocks += log_det_from_factor(factor(sub, "diagonal block").matrixLLT());
  }
  return 0.5 * (blocks - log_det_from_factor(llt0.matrixLLT()));
}

double baseline_block_independent(const CovarianceModel& model, const Locations& locs,
                                  std::span<const std::size_t> tiles, std::size_t cap) {
  check_cap(locs.size(), cap);
  return block_independent_kl(build_cov_matrix(model, locs), tile_labels(locs, tiles));
}

double wendland1(double r, double taper_range) {
  const double s = r / taper_range;
  if (s >= 1.0) return 0.0;
  const double t = 1.0 - s;
  return t * t * t * t * (1.0 + 4.0 * s);
}

TaperResult baseline_taper(const CovarianceModel& model, const Locations& locs, double taper_range, bool optimize,
                           std::size_t cap) {
  if (model.family != KernelFamily::matern_isotropic) throw InvalidArgument("tapering needs an isotropic kernel");
  if (!(taper_range > 0.0)) throw InvalidArgument("taper range must be positive");
  const std::size_t n = locs.size();
  check_cap(n, cap);
  const DenseGaussian exact(model, locs, cap);
  const Eigen::MatrixXd l0 = exact.cholesky().matrixL();
  const auto nn = static_cast<Eigen::Index>(n);

  Eigen::MatrixXd distance(nn, nn);
  Eigen::MatrixXd taper(nn, nn);
  for (Eigen::Index a = 0; a < nn; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double r = std::sqrt(locs.squared_distance(static_cast<std::size_t>(a), static_cast<std::size_t>(b)));
      distance(a, b) = distance(b, a) = r;
      taper(a, b) = taper(b, a) = wendland1(r, taper_range);
    }
  }
  const double diagonal_extra = model.nugget + model.jitter;
  const bool profile_variance = diagonal_extra == 0.0;

  TaperResult result;
  // Returns the KL and, when profiling, the optimal variance for this range.
  auto evaluate = [&](double variance, double range, double& best_variance) {
    ++result.evaluations;
    CovarianceModel unit = model;
    unit.variance = 1.0;
    unit.range = range;
    unit.nugget = 0.0;
    unit.jitter = 0.0;
    const CovarianceKernel k(unit);
    const double var = profile_variance ? 1.0 : variance;
    Eigen::MatrixXd sigma1(nn, nn);
    for (Eigen::Index a = 0; a < nn; ++a) {
      sigma1(a, a) = var + diagonal_extra;
      for (Eigen::Index b = 0; b < a; ++b) {
        sigma1(a, b) = var * k.correlation(distance(a, b) / range) * taper(a, b);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt1(sigma1);
    if (llt1.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double trace = llt1.matrixL().solve(l0).squaredNorm();
    const double ld1 = log_det_from_factor(llt1.matrixLLT());
    const double dn = static_cast<double>(n);
    if (profile_variance) {
      best_variance = trace / dn;
      return 0.5 * (dn * std::log(best_variance) + ld1 - exact.log_det());
    }
    best_variance = variance;
    return 0.5 * (trace - dn + ld1 - exact.log_det());
  };

  double best_variance = model.variance;
  if (!optimize) {
    if (profile_variance) {
      // Evaluate at the true variance rather than the profiled one.
      const Eigen::MatrixXd sigma1 = build_cov_matrix(model, locs).cwiseProduct(taper);
      result.kl = kl_divergence_general(exact.covariance(), sigma1);
      result.evaluations = 1;
    } else {
      result.kl = evaluate(model.variance, model.range, best_variance);
    }
    result.variance = model.variance;
    result.range = model.range;
    return result;
  }

  NelderMeadOptions options;
  options.initial_step = 0.3;
  options.x_tolerance = 1e-5;
  options.f_tolerance = 1e-12;
  options.max_evaluations = 500;
  if (profile_variance) {
    double v = 0.0;
    auto objective = [&](const Eigen::VectorXd& u) { return evaluate(0.0, std::exp(u[0]), v); };
    const NelderMeadResult best = nelder_mead(objective, Eigen::VectorXd::Constant(1, std::log(model.range)), options);
    result.range = std::exp(best.x[0]);
    result.kl = evaluate(0.0, result.range, best_variance);
    result.variance = best_variance;
  } else {
    double v = 0.0;
    auto objective = [&](const Eigen::VectorXd& u) { return evaluate(std::exp(u[0]), std::exp(u[1]), v); };
    Eigen::VectorXd start(2);
    start << std::log(model.variance), std::log(model.range);
    const NelderMeadResult best = nelder_mead(objective, start, options);
    result.variance = std::exp(best.x[0]);
    result.range = std::exp(best.x[1]);
    result.kl = best.value;
  }
  return result;
}

}  // namespace vecchia
