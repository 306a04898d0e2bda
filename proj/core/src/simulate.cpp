#include "vecchia/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "vecchia/error.hpp"
#include "vecchia/grouping.hpp"
#include "vecchia/parallel.hpp"
#include "vecchia/random.hpp"

namespace vecchia {

Eigen::VectorXd standard_normal(std::size_t n, std::uint64_t seed, std::uint64_t member) {
  Philox rng(seed, streams::simulation + member);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return z;
}

Eigen::VectorXd unconditional_draw(const SparseInverseCholesky& gamma, std::uint64_t seed, std::uint64_t member) {
  return gamma.solve(standard_normal(gamma.size(), seed, member));
}

PredictionSetup::PredictionSetup(const CovarianceModel& model, const Locations& observed,
                                 const Permutation& observed_perm, const Locations& prediction,
                                 const PredictionOptions& options)
    : model_(model), n_observed_(observed.size()) {
  if (observed_perm.size() != observed.size()) throw InvalidArgument("observed permutation size mismatch");
  if (prediction.empty()) throw InvalidArgument("no prediction locations");
  const Locations joint = observed.concatenate(prediction);

  Permutation prediction_perm;
  switch (options.prediction_ordering) {
    case OrderingScheme::random:
      prediction_perm = order_random(prediction.size(), options.seed, streams::prediction_ordering);
      break;
    default:
      prediction_perm = make_ordering(options.prediction_ordering, prediction, options.seed);
      break;
  }
  std::vector<int> forward(observed_perm.forward());
  forward.reserve(joint.size());
  for (int k : prediction_perm.forward()) forward.push_back(static_cast<int>(n_observed_) + k);
  joint_perm_ = Permutation(std::move(forward));

  const std::size_t m_pred = options.m_prediction.value_or(options.m);
  const Locations metric = neighbor_metric_locations(joint, options.distance);
  const NeighborSets sets = nn_ordered_fast(metric, joint_perm_, std::max(options.m, m_pred), nullptr, nullptr,
                                            options.threads)
                                .truncated(n_observed_, options.m, m_pred);
  if (options.grouped) {
    gamma_ = build_gamma_tilde(model_, joint, joint_perm_, group_blocks(sets), options.threads);
  } else {
    gamma_ = build_gamma_tilde(model_, joint, joint_perm_, sets, options.threads);
  }
}

PredictionSetup::PredictionSetup(const CovarianceModel& model, const Locations& joint, std::size_t n_observed,
                                 Permutation joint_perm, const NeighborSets& sets, bool grouped, int threads)
    : model_(model), n_observed_(n_observed), joint_perm_(std::move(joint_perm)) {
  if (n_observed_ >= joint.size()) throw InvalidArgument("no prediction locations");
  check_layout();
  if (grouped) {
    gamma_ = build_gamma_tilde(model_, joint, joint_perm_, group_blocks(sets), threads);
  } else {
    gamma_ = build_gamma_tilde(model_, joint, joint_perm_, sets, threads);
  }
}

void PredictionSetup::check_layout() const {
  for (std::size_t t = 0; t < n_observed_; ++t) {
    if (static_cast<std::size_t>(joint_perm_[t]) >= n_observed_) {
      throw InvalidArgument("joint ordering must place every observed point before the prediction points");
    }
  }
}

Eigen::VectorXd PredictionSetup::observed_residual(std::span<const double> y_observed) const {
  if (y_observed.size() != n_observed_) throw InvalidArgument("observation count mismatch");
  Eigen::VectorXd r(static_cast<Eigen::Index>(n_observed_));
  for (std::size_t t = 0; t < n_observed_; ++t) {
    r[static_cast<Eigen::Index>(t)] = y_observed[static_cast<std::size_t>(joint_perm_[t])] - model_.mean;
  }
  return r;
}

Eigen::VectorXd PredictionSetup::krige_permuted(const Eigen::Ref<const Eigen::VectorXd>& residual) const {
  const std::size_t n_pred = prediction_count();
  Eigen::VectorXd x(static_cast<Eigen::Index>(n_pred));
  for (std::size_t t = 0; t < n_pred; ++t) {
    const std::size_t i = n_observed_ + t;
    const auto cols = gamma_.row_columns(i);
    const auto vals = gamma_.row_values(i);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < cols.size(); ++k) {
      const auto c = static_cast<std::size_t>(cols[k]);
      sum += vals[k] * (c < n_observed_ ? residual[static_cast<Eigen::Index>(c)]
                                        : x[static_cast<Eigen::Index>(c - n_observed_)]);
    }
    x[static_cast<Eigen::Index>(t)] = -sum / vals.back();
  }
  return x;
}

Eigen::VectorXd PredictionSetup::unpermute_prediction(const Eigen::Ref<const Eigen::VectorXd>& permuted) const {
  Eigen::VectorXd out(permuted.size());
  for (Eigen::Index t = 0; t < permuted.size(); ++t) {
    out[joint_perm_[n_observed_ + static_cast<std::size_t>(t)] - static_cast<int>(n_observed_)] = permuted[t];
  }
  return out;
}

Eigen::VectorXd PredictionSetup::conditional_expectation(std::span<const double> y_observed) const {
  const Eigen::VectorXd x = krige_permuted(observed_residual(y_observed));
  return unpermute_prediction(x.array() + model_.mean);
}

Eigen::VectorXd PredictionSetup::conditional_draw(std::span<const double> y_observed, std::uint64_t seed,
                                                  std::uint64_t member) const {
  const Eigen::VectorXd joint = unconditional_draw(gamma_, seed, member);
  const auto n_obs = static_cast<Eigen::Index>(n_observed_);
  const Eigen::VectorXd r = observed_residual(y_observed) - joint.head(n_obs);
  const Eigen::VectorXd x = krige_permuted(r) + joint.tail(joint.size() - n_obs);
  return unpermute_prediction(x.array() + model_.mean);
}

EnsembleResult conditional_ensemble(const PredictionSetup& setup, std::span<const double> y_observed,
                                    std::size_t members, std::uint64_t seed, bool keep_draws, int threads) {
  if (members < 2) throw InvalidArgument("an ensemble needs at least two members");
  const auto n_pred = static_cast<Eigen::Index>(setup.prediction_count());
  EnsembleResult result;
  result.mean = setup.conditional_expectation(y_observed);
  if (keep_draws) result.draws.resize(n_pred, static_cast<Eigen::Index>(members));

  // Fixed chunks keep the floating-point summation order independent of the
  // number of threads.
  constexpr std::size_t chunk = 256;
  const std::size_t chunks = (members + chunk - 1) / chunk;
  std::vector<Eigen::VectorXd> sums(chunks, Eigen::VectorXd::Zero(n_pred));
  std::vector<Eigen::VectorXd> squares(chunks, Eigen::VectorXd::Zero(n_pred));
  parallel_for(chunks, threads, 1, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      for (std::size_t k = c * chunk; k < std::min(members, (c + 1) * chunk); ++k) {
        const Eigen::VectorXd draw = setup.conditional_draw(y_observed, seed, k);
        const Eigen::VectorXd dev = draw - result.mean;
        sums[c] += dev;
        squares[c] += dev.cwiseAbs2();
        if (keep_draws) result.draws.col(static_cast<Eigen::Index>(k)) = draw;
      }
    }
  });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_pred);
  Eigen::VectorXd square = Eigen::VectorXd::Zero(n_pred);
  for (std::size_t c = 0; c < chunks; ++c) {
    sum += sums[c];
    square += squares[c];
  }
  const double count = static_cast<double>(members);
  result.sd = ((square - sum.cwiseAbs2() / count) / (count - 1.0)).cwiseMax(0.0).cwiseSqrt();
  return result;
}

}  // namespace vecchia
