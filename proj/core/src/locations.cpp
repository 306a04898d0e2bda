#include "vecchia/locations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vecchia/error.hpp"

namespace vecchia {

Locations::Locations(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw InvalidArgument("locations need at least one dimension");
  if (coords_.size() % dim_ != 0) throw InvalidArgument("coordinate count is not a multiple of the dimension");
  for (double c : coords_) {
    if (!std::isfinite(c)) throw InvalidArgument("non-finite coordinate");
  }
}

Locations::Locations(std::size_t dim, std::vector<double> coords, std::vector<double> times)
    : Locations(dim, std::move(coords)) {
  if (!times.empty() && times.size() != size()) throw InvalidArgument("time column length differs from point count");
  for (double t : times) {
    if (!std::isfinite(t)) throw InvalidArgument("non-finite time");
  }
  times_ = std::move(times);
}

Locations Locations::from_sphere_time(std::span<const double> lon_deg, std::span<const double> lat_deg,
                                      std::span<const double> times) {
  if (lon_deg.size() != lat_deg.size() || (!times.empty() && times.size() != lon_deg.size())) {
    throw InvalidArgument("lon, lat and time columns differ in length");
  }
  constexpr double to_rad = std::numbers::pi / 180.0;
  std::vector<double> xyz;
  xyz.reserve(3 * lon_deg.size());
  for (std::size_t i = 0; i < lon_deg.size(); ++i) {
    const double lon = lon_deg[i] * to_rad;
    const double lat = lat_deg[i] * to_rad;
    xyz.push_back(std::cos(lat) * std::cos(lon));
    xyz.push_back(std::cos(lat) * std::sin(lon));
    xyz.push_back(std::sin(lat));
  }
  return Locations(3, std::move(xyz), std::vector<double>(times.begin(), times.end()));
}

Locations Locations::regular_grid(std::span<const std::size_t> side) {
  if (side.empty()) throw InvalidArgument("grid needs at least one axis");
  std::size_t n = 1;
  for (std::size_t s : side) {
    if (s == 0) throw InvalidArgument("grid side must be positive");
    n *= s;
  }
  const std::size_t d = side.size();
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = rest % side[j];
      rest /= side[j];
      coords[i * d + j] = (static_cast<double>(k) + 0.5) / static_cast<double>(side[j]);
    }
  }
  return Locations(d, std::move(coords));
}

double Locations::squared_distance(std::size_t a, std::size_t b) const {
  return vecchia::squared_distance(point(a), point(b));
}

Locations Locations::subset(std::span<const int> indices) const {
  std::vector<double> coords;
  coords.reserve(indices.size() * dim_);
  std::vector<double> times;
  if (has_time()) times.reserve(indices.size());
  for (int idx : indices) {
    const auto i = static_cast<std::size_t>(idx);
    if (idx < 0 || i >= size()) throw InvalidArgument("location index out of range");
    const auto p = point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    if (has_time()) times.push_back(times_[i]);
  }
  return Locations(dim_, std::move(coords), std::move(times));
}

Locations Locations::concatenate(const Locations& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  if (other.dim_ != dim_ || other.has_time() != has_time()) {
    throw InvalidArgument("cannot concatenate locations of different shape");
  }
  std::vector<double> coords = coords_;
  coords.insert(coords.end(), other.coords_.begin(), other.coords_.end());
  std::vector<double> times = times_;
  times.insert(times.end(), other.times_.begin(), other.times_.end());
  return Locations(dim_, std::move(coords), std::move(times));
}

Locations Locations::with_time_as_coordinate() const {
  if (!has_time()) return *this;
  std::vector<double> coords;
  coords.reserve(size() * (dim_ + 1));
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    coords.push_back(times_[i]);
  }
  return Locations(dim_ + 1, std::move(coords));
}

Locations Locations::time_only() const {
  if (!has_time()) throw InvalidArgument("locations carry no time coordinate");
  return Locations(1, times_);
}

Locations Locations::space_only() const { return Locations(dim_, coords_); }

std::vector<double> Locations::mean() const {
  std::vector<double> center(dim_, 0.0);
  const std::size_t n = size();
  if (n == 0) return center;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) center[j] += coords_[i * dim_ + j];
  }
  for (double& c : center) c /= static_cast<double>(n);
  return center;
}

double Locations::diameter_upper_bound() const {
  double sum = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < size(); ++i) {
      lo = std::min(lo, coord(i, j));
      hi = std::max(hi, coord(i, j));
    }
    if (size() > 0) sum += (hi - lo) * (hi - lo);
  }
  return std::sqrt(sum);
}

}  // namespace vecchia
