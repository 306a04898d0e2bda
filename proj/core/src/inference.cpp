#include "vecchia/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vecchia/error.hpp"
#include "vecchia/optimize.hpp"

namespace vecchia {

void FitConfig::validate() const {
  if (schedule.empty()) throw InvalidArgument("neighbour schedule is empty");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (schedule[k] == 0) throw InvalidArgument("neighbour schedule entries must be positive");
    if (k > 0 && schedule[k] <= schedule[k - 1]) throw InvalidArgument("neighbour schedule must be strictly increasing");
  }
  if (!(tolerance > 0.0)) throw InvalidArgument("optimizer tolerance must be positive");
  if (max_evaluations <= 0) throw InvalidArgument("max evaluations must be positive");
  if (!(convergence >= 0.0)) throw InvalidArgument("convergence threshold must be nonnegative");
}

namespace {

double sample_variance(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(y.size() - 1);
}

double time_span(const Locations& locs) {
  if (!locs.has_time()) return 1.0;
  const auto [lo, hi] = std::minmax_element(locs.times().begin(), locs.times().end());
  return *hi > *lo ? *hi - *lo : 1.0;
}

struct Scales {
  double variance = 1.0;
  double diameter = 1.0;
  double duration = 1.0;
};

Scales data_scales(const FitData& data) {
  Scales s;
  const double v = sample_variance(data.y);
  s.variance = v > 0.0 ? v : 1.0;
  const double d = data.locs.diameter_upper_bound();
  s.diameter = d > 0.0 ? d : 1.0;
  s.duration = time_span(data.locs);
  return s;
}

// Search box for each parameter, natural scale.
std::pair<double, double> bounds(Parameter p, const Scales& s) {
  switch (p) {
    case Parameter::variance:
      return {1e-8 * s.variance, 1e4 * s.variance};
    case Parameter::range:
      return {1e-4 * s.diameter, 1e2 * s.diameter};
    case Parameter::range_time:
      return {1e-4 * s.duration, 1e2 * s.duration};
    case Parameter::smoothness:
      return {0.05, 10.0};
    case Parameter::nugget:
      return {1e-10 * s.variance, 1e3 * s.variance};
  }
  return {0.0, std::numeric_limits<double>::infinity()};
}

std::string describe(const CovarianceModel& model) {
  std::ostringstream out;
  out << "variance=" << model.variance << " range=" << model.range;
  if (model.family == KernelFamily::matern_spacetime) out << " range_time=" << model.range_time;
  out << " smoothness=" << model.smoothness << " nugget=" << model.nugget;
  return out.str();
}

}  // namespace

CovarianceModel default_initial_model(const FitData& data, KernelFamily family) {
  const Scales s = data_scales(data);
  CovarianceModel model;
  model.family = family;
  model.variance = s.variance;
  model.range = 0.25 * s.diameter;
  model.range_time = 0.25 * s.duration;
  model.smoothness = 0.5;
  model.nugget = 0.01 * s.variance;
  if (!data.y.empty()) {
    model.mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(data.y.size());
  }
  return model;
}

double profiled_loglik(const CovarianceModel& model, const FitData& data, const VecchiaStructure& structure,
                       bool estimate_mean, int threads, Eigen::VectorXd* beta_out) {
  const Permutation& perm = structure.permutation();
  const SparseInverseCholesky gamma = structure.build(model, data.locs, threads);
  const std::vector<double> y = perm.apply(data.y);
  if (data.covariates) {
    const ProfileResult profile = profile_beta(gamma, permute_rows(*data.covariates, perm), y);
    if (beta_out != nullptr) *beta_out = profile.beta;
    return profile.loglik;
  }
  if (estimate_mean) {
    const ProfileResult profile = profile_beta(gamma, Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1), y);
    if (beta_out != nullptr) *beta_out = profile.beta;
    return profile.loglik;
  }
  if (beta_out != nullptr) beta_out->resize(0);
  return loglik(gamma, y, model.mean);
}

FitResult fit(const FitData& data, const FitConfig& config) {
  config.validate();
  const std::size_t n = data.locs.size();
  if (n < 2) throw InvalidArgument("fitting needs at least two observations");
  if (data.y.size() != n) throw InvalidArgument("response length differs from location count");
  if (data.covariates && static_cast<std::size_t>(data.covariates->rows()) != n) {
    throw InvalidArgument("design matrix rows differ from location count");
  }

  const Scales scales = data_scales(data);
  CovarianceModel current = config.initial.value_or(default_initial_model(data, config.family));
  current.validate();

  FitResult result;
  result.free = config.free.empty() ? current.parameters() : config.free;
  const std::vector<Parameter> valid = current.parameters();
  for (Parameter p : result.free) {
    if (std::find(valid.begin(), valid.end(), p) == valid.end()) {
      throw InvalidArgument("parameter " + std::string(to_string(p)) + " does not belong to the kernel family");
    }
  }
  const auto dim = static_cast<Eigen::Index>(result.free.size());
  for (Parameter p : result.free) {
    auto [lo, hi] = bounds(p, scales);
    double v = current.get(p);
    if (p == Parameter::nugget && v <= lo) v = 0.01 * scales.variance;
    current.set(p, std::clamp(v, lo, hi));
  }

  result.perm = make_ordering(config.ordering, data.locs, config.seed);

  auto model_at = [&](const Eigen::VectorXd& u, const CovarianceModel& base, bool& inside) {
    CovarianceModel model = base;
    inside = true;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const Parameter p = result.free[static_cast<std::size_t>(k)];
      const auto [lo, hi] = bounds(p, scales);
      const double v = std::exp(u[k]);
      if (!(v >= lo && v <= hi)) inside = false;
      model.set(p, v);
    }
    return model;
  };

  std::size_t previous_m = 0;
  for (std::size_t requested : config.schedule) {
    const std::size_t m = std::min(requested, n - 1);
    if (m == previous_m) break;
    previous_m = m;
    const auto start = std::chrono::steady_clock::now();

    const VecchiaStructure structure(data.locs, result.perm,
                                     StructureOptions{m, config.grouped, config.distance, config.threads});
    auto objective = [&](const Eigen::VectorXd& u) {
      bool inside = false;
      const CovarianceModel model = model_at(u, current, inside);
      if (!inside) return std::numeric_limits<double>::infinity();
      try {
        return -profiled_loglik(model, data, structure, config.estimate_mean, config.threads);
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };

    Eigen::VectorXd u0(dim);
    for (Eigen::Index k = 0; k < dim; ++k) u0[k] = std::log(current.get(result.free[static_cast<std::size_t>(k)]));

    FitStage stage;
    stage.m = m;
    try {
      stage.initial_loglik = profiled_loglik(current, data, structure, config.estimate_mean, config.threads);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [at " + describe(current) + ", m=" + std::to_string(m) + "]");
    }

    NelderMeadOptions options;
    options.initial_step = result.stages.empty() ? 0.5 : 0.2;
    options.x_tolerance = config.tolerance;
    options.max_evaluations = config.max_evaluations;
    const NelderMeadResult best = nelder_mead(objective, u0, options);

    bool inside = false;
    stage.model = model_at(best.x, current, inside);
    stage.loglik = -best.value;
    stage.evaluations = best.evaluations + 1;
    stage.optimizer_converged = best.converged;
    profiled_loglik(stage.model, data, structure, config.estimate_mean, config.threads, &stage.beta);
    if (!data.covariates && config.estimate_mean && stage.beta.size() == 1) stage.model.mean = stage.beta[0];
    for (Parameter p : result.free) {
      const auto [lo, hi] = bounds(p, scales);
      const double v = stage.model.get(p);
      if (std::log(v / lo) < 1e-3 || std::log(hi / v) < 1e-3) stage.at_bound.push_back(p);
    }
    if (!result.stages.empty()) {
      const CovarianceModel& prev = result.stages.back().model;
      for (Parameter p : result.free) {
        const double now = stage.model.get(p);
        stage.relative_change = std::max(stage.relative_change, std::abs(now - prev.get(p)) / std::abs(now));
      }
    }
    if (!best.converged) {
      warn("optimizer stopped at the evaluation limit for m=" + std::to_string(m));
    }
    stage.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    current = stage.model;
    result.stages.push_back(std::move(stage));
    result.final_m = m;

    if (result.stages.size() > 1 && result.stages.back().relative_change < config.convergence) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace vecchia
