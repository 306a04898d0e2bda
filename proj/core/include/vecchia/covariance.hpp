#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vecchia/locations.hpp"

namespace vecchia {

enum class KernelFamily {
  matern_isotropic,
  /// Matern in d12 = sqrt(|dx|^2 / range^2 + |dt|^2 / range_time^2).
  matern_spacetime,
};

enum class Parameter { variance, range, range_time, smoothness, nugget };

std::string_view to_string(KernelFamily family);
std::string_view to_string(Parameter parameter);
std::optional<KernelFamily> parse_family(std::string_view name);
std::optional<Parameter> parse_parameter(std::string_view name);

struct CovarianceModel {
  KernelFamily family = KernelFamily::matern_isotropic;
  double variance = 1.0;    ///< sigma^2
  double range = 0.1;       ///< alpha (spatial range for spacetime)
  double range_time = 1.0;  ///< temporal range, spacetime only
  double smoothness = 0.5;  ///< nu
  double nugget = 0.0;      ///< tau^2, added on the diagonal
  double mean = 0.0;        ///< constant mean used when no design matrix is given
  double jitter = 0.0;      ///< extra diagonal term for degenerate inputs

  /// Throws InvalidArgument unless variance, ranges and smoothness are
  /// positive and nugget, jitter are nonnegative.
  void validate() const;

  /// Covariance parameters of this family, in canonical order:
  /// isotropic (variance, range, smoothness, nugget),
  /// spacetime (variance, range, range_time, smoothness, nugget).
  std::vector<Parameter> parameters() const;
  double get(Parameter p) const;
  void set(Parameter p, double value);

  static CovarianceModel exponential(double variance, double range) {
    return CovarianceModel{.variance = variance, .range = range, .smoothness = 0.5};
  }
  static CovarianceModel matern(double variance, double range, double smoothness, double nugget = 0.0) {
    return CovarianceModel{.variance = variance, .range = range, .smoothness = smoothness, .nugget = nugget};
  }
};

/// Matern covariance sigma^2 / (Gamma(nu) 2^(nu-1)) s^nu K_nu(s) with s = r / range.
double matern(double r, double variance, double range, double smoothness);

/// Unit-variance Matern correlation at scaled distance s >= 0.
double matern_correlation(double s, double smoothness);

namespace detail {
/// Correlation through the general Bessel path even at half-integer nu.
double matern_correlation_general(double s, double smoothness);
}  // namespace detail

/// Precomputed evaluator for one model; cheap to copy, safe to share.
class CovarianceKernel {
 public:
  explicit CovarianceKernel(const CovarianceModel& model);

  const CovarianceModel& model() const { return model_; }

  /// Covariance between points a and b of `locs`, without the nugget.
  double operator()(const Locations& locs, std::size_t a, std::size_t b) const;
  /// Unit-variance correlation at scaled distance.
  double correlation(double scaled_distance) const;
  /// Value on the diagonal of an assembled matrix.
  double diagonal() const { return model_.variance + model_.nugget + model_.jitter; }

 private:
  enum class Form { exponential, matern32, matern52, half_integer, general };

  CovarianceModel model_;
  Form form_;
  int half_order_ = 0;
  double log_norm_ = 0.0;  // -lgamma(nu) - (nu - 1) log 2
  double inv_range2_ = 0.0;
  double inv_range_time2_ = 0.0;
};

/// Kernel between two isotropic points, including the nugget when p1 == p2.
double kernel(const CovarianceModel& model, std::span<const double> p1, std::span<const double> p2);
/// Space-time form; the nugget applies when both space and time coincide.
double kernel(const CovarianceModel& model, std::span<const double> p1, double t1, std::span<const double> p2,
              double t2);

/// Dense covariance of locs[indices[a]], locs[indices[b]]. The nugget and jitter
/// go on the diagonal only. Coincident distinct points with no nugget or
/// jitter trigger a warning.
Eigen::MatrixXd build_cov_matrix(const CovarianceModel& model, const Locations& locs, std::span<const int> indices);
/// All points in their stored order.
Eigen::MatrixXd build_cov_matrix(const CovarianceModel& model, const Locations& locs);

/// Fills the lower triangle (and diagonal) of `out` for the given indices.
/// Returns true when two distinct indices share a location.
bool fill_covariance_lower(const CovarianceKernel& kernel, const Locations& locs, std::span<const int> indices,
                           Eigen::Ref<Eigen::MatrixXd> out);

}  // namespace vecchia
