#include "vecchia/covariance.hpp"

#include <cmath>
#include <numbers>

#include "vecchia/bessel.hpp"
#include "vecchia/error.hpp"

namespace vecchia {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::matern_isotropic:
      return "matern-isotropic";
    case KernelFamily::matern_spacetime:
      return "matern-spacetime";
  }
  return "unknown";
}

std::string_view to_string(Parameter parameter) {
  switch (parameter) {
    case Parameter::variance:
      return "variance";
    case Parameter::range:
      return "range";
    case Parameter::range_time:
      return "range_time";
    case Parameter::smoothness:
      return "smoothness";
    case Parameter::nugget:
      return "nugget";
  }
  return "unknown";
}

std::optional<KernelFamily> parse_family(std::string_view name) {
  if (name == "matern-isotropic" || name == "matern") return KernelFamily::matern_isotropic;
  if (name == "matern-spacetime" || name == "spacetime") return KernelFamily::matern_spacetime;
  return std::nullopt;
}

std::optional<Parameter> parse_parameter(std::string_view name) {
  for (Parameter p : {Parameter::variance, Parameter::range, Parameter::range_time, Parameter::smoothness,
                      Parameter::nugget}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

void CovarianceModel::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  auto nonnegative = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!positive(variance)) throw InvalidArgument("variance must be positive");
  if (!positive(range)) throw InvalidArgument("range must be positive");
  if (family == KernelFamily::matern_spacetime && !positive(range_time)) {
    throw InvalidArgument("temporal range must be positive");
  }
  if (!positive(smoothness)) throw InvalidArgument("smoothness must be positive");
  if (!nonnegative(nugget)) throw InvalidArgument("nugget must be nonnegative");
  if (!nonnegative(jitter)) throw InvalidArgument("jitter must be nonnegative");
  if (!std::isfinite(mean)) throw InvalidArgument("mean must be finite");
}

std::vector<Parameter> CovarianceModel::parameters() const {
  if (family == KernelFamily::matern_spacetime) {
    return {Parameter::variance, Parameter::range, Parameter::range_time, Parameter::smoothness, Parameter::nugget};
  }
  return {Parameter::variance, Parameter::range, Parameter::smoothness, Parameter::nugget};
}

double CovarianceModel::get(Parameter p) const {
  switch (p) {
    case Parameter::variance:
      return variance;
    case Parameter::range:
      return range;
    case Parameter::range_time:
      return range_time;
    case Parameter::smoothness:
      return smoothness;
    case Parameter::nugget:
      return nugget;
  }
  return 0.0;
}

void CovarianceModel::set(Parameter p, double value) {
  switch (p) {
    case Parameter::variance:
      variance = value;
      break;
    case Parameter::range:
      range = value;
      break;
    case Parameter::range_time:
      range_time = value;
      break;
    case Parameter::smoothness:
      smoothness = value;
      break;
    case Parameter::nugget:
      nugget = value;
      break;
  }
}

namespace {

double log_normalizer(double nu) { return -std::lgamma(nu) - (nu - 1.0) * std::numbers::ln2; }

double general_correlation(double s, double nu, double log_norm) {
  if (s == 0.0) return 1.0;
  const double log_k = std::log(bessel_k(nu, s, BesselScaling::exponential)) - s;
  return std::exp(log_norm + nu * std::log(s) + log_k);
}

}  // namespace

double matern_correlation(double s, double smoothness) {
  if (s < 0.0) throw InvalidArgument("negative distance");
  if (s == 0.0) return 1.0;
  if (std::abs(smoothness - 0.5) <= 1e-12) return std::exp(-s);
  if (std::abs(smoothness - 1.5) <= 1e-12) return (1.0 + s) * std::exp(-s);
  if (std::abs(smoothness - 2.5) <= 1e-12) return (1.0 + s + s * s / 3.0) * std::exp(-s);
  return general_correlation(s, smoothness, log_normalizer(smoothness));
}

namespace detail {
double matern_correlation_general(double s, double smoothness) {
  if (s == 0.0) return 1.0;
  const double log_k = std::log(detail::bessel_k_general(smoothness, s, BesselScaling::exponential)) - s;
  return std::exp(log_normalizer(smoothness) + smoothness * std::log(s) + log_k);
}
}  // namespace detail

double matern(double r, double variance, double range, double smoothness) {
  if (!(range > 0.0) || !(smoothness > 0.0)) throw InvalidArgument("range and smoothness must be positive");
  return variance * matern_correlation(r / range, smoothness);
}

CovarianceKernel::CovarianceKernel(const CovarianceModel& model) : model_(model) {
  model_.validate();
  const double nu = model_.smoothness;
  if (std::abs(nu - 0.5) <= 1e-12) {
    form_ = Form::exponential;
  } else if (std::abs(nu - 1.5) <= 1e-12) {
    form_ = Form::matern32;
  } else if (std::abs(nu - 2.5) <= 1e-12) {
    form_ = Form::matern52;
  } else if (is_half_integer(nu)) {
    form_ = Form::half_integer;
    half_order_ = static_cast<int>(std::lround(nu - 0.5));
  } else {
    form_ = Form::general;
  }
  log_norm_ = log_normalizer(nu);
  inv_range2_ = 1.0 / (model_.range * model_.range);
  inv_range_time2_ = model_.family == KernelFamily::matern_spacetime ? 1.0 / (model_.range_time * model_.range_time) : 0.0;
}

double CovarianceKernel::correlation(double s) const {
  if (s == 0.0) return 1.0;
  switch (form_) {
    case Form::exponential:
      return std::exp(-s);
    case Form::matern32:
      return (1.0 + s) * std::exp(-s);
    case Form::matern52:
      return (1.0 + s + s * s / 3.0) * std::exp(-s);
    case Form::half_integer: {
      const double k = detail::bessel_k_half_integer(half_order_, s, BesselScaling::exponential);
      return std::exp(log_norm_ + model_.smoothness * std::log(s) + std::log(k) - s);
    }
    case Form::general:
      return general_correlation(s, model_.smoothness, log_norm_);
  }
  return 0.0;
}

double CovarianceKernel::operator()(const Locations& locs, std::size_t a, std::size_t b) const {
  double scaled2 = locs.squared_distance(a, b) * inv_range2_;
  if (model_.family == KernelFamily::matern_spacetime) {
    const double dt = locs.time(a) - locs.time(b);
    scaled2 += dt * dt * inv_range_time2_;
  }
  return model_.variance * correlation(std::sqrt(scaled2));
}

double kernel(const CovarianceModel& model, std::span<const double> p1, std::span<const double> p2) {
  if (p1.size() != p2.size()) throw InvalidArgument("points differ in dimension");
  if (model.family != KernelFamily::matern_isotropic) {
    throw InvalidArgument("space-time kernel needs time coordinates");
  }
  model.validate();
  const double r2 = squared_distance(p1, p2);
  const double nugget = r2 == 0.0 ? model.nugget : 0.0;
  return model.variance * matern_correlation(std::sqrt(r2) / model.range, model.smoothness) + nugget;
}

double kernel(const CovarianceModel& model, std::span<const double> p1, double t1, std::span<const double> p2,
              double t2) {
  if (p1.size() != p2.size()) throw InvalidArgument("points differ in dimension");
  if (model.family != KernelFamily::matern_spacetime) return kernel(model, p1, p2);
  model.validate();
  const double r2 = squared_distance(p1, p2);
  const double dt = t1 - t2;
  const double d2 = r2 / (model.range * model.range) + dt * dt / (model.range_time * model.range_time);
  const double nugget = (r2 == 0.0 && dt == 0.0) ? model.nugget : 0.0;
  return model.variance * matern_correlation(std::sqrt(d2), model.smoothness) + nugget;
}

bool fill_covariance_lower(const CovarianceKernel& kernel, const Locations& locs, std::span<const int> indices,
                           Eigen::Ref<Eigen::MatrixXd> out) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const double diag = kernel.diagonal();
  const bool check_duplicates = kernel.model().nugget == 0.0 && kernel.model().jitter == 0.0;
  const bool spacetime = kernel.model().family == KernelFamily::matern_spacetime;
  bool duplicate = false;
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto ia = static_cast<std::size_t>(indices[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < a; ++b) {
      const auto ib = static_cast<std::size_t>(indices[static_cast<std::size_t>(b)]);
      const double value = kernel(locs, ia, ib);
      out(a, b) = value;
      if (check_duplicates && ia != ib && locs.squared_distance(ia, ib) == 0.0 &&
          (!spacetime || locs.time(ia) == locs.time(ib))) {
        duplicate = true;
      }
    }
    out(a, a) = diag;
  }
  return duplicate;
}

Eigen::MatrixXd build_cov_matrix(const CovarianceModel& model, const Locations& locs, std::span<const int> indices) {
  if (model.family == KernelFamily::matern_spacetime && !locs.has_time()) {
    throw InvalidArgument("space-time kernel needs time coordinates");
  }
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= locs.size()) throw InvalidArgument("location index out of range");
  }
  const CovarianceKernel kernel(model);
  const auto n = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd cov(n, n);
  if (fill_covariance_lower(kernel, locs, indices, cov)) {
    warn("coincident locations with zero nugget; covariance may be singular (set a nugget or jitter)");
  }
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov;
}

Eigen::MatrixXd build_cov_matrix(const CovarianceModel& model, const Locations& locs) {
  std::vector<int> all(locs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return build_cov_matrix(model, locs, all);
}

}  // namespace vecchia
