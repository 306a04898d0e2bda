#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vecchia {

/// n points in R^d (d >= 1), stored row-major, with an optional time
/// coordinate per point. Sphere-time data is stored as unit 3-vectors plus
/// time, so Euclidean (chordal) distance applies throughout.
class Locations {
 public:
  Locations() = default;
  /// `coords` holds n*dim values, point-major.
  Locations(std::size_t dim, std::vector<double> coords);
  Locations(std::size_t dim, std::vector<double> coords, std::vector<double> times);

  /// (lon, lat) in degrees plus time, converted to unit 3-vectors.
  static Locations from_sphere_time(std::span<const double> lon_deg, std::span<const double> lat_deg,
                                    std::span<const double> times);

  /// Regular grid with `side[j]` points along axis j at cell centers
  /// (k + 1/2) / side[j] of the unit cube. Axis 0 varies fastest.
  static Locations regular_grid(std::span<const std::size_t> side);
  static Locations regular_grid(std::initializer_list<std::size_t> side) {
    return regular_grid(std::span<const std::size_t>(side.begin(), side.size()));
  }

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }
  bool has_time() const { return !times_.empty(); }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double coord(std::size_t i, std::size_t axis) const { return coords_[i * dim_ + axis]; }
  double time(std::size_t i) const { return times_[i]; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& times() const { return times_; }

  /// Squared Euclidean distance between spatial parts of points a and b.
  double squared_distance(std::size_t a, std::size_t b) const;

  /// Points in the order given by `indices`.
  Locations subset(std::span<const int> indices) const;
  /// This set followed by `other` (dimensions and time presence must agree).
  Locations concatenate(const Locations& other) const;
  /// Spatial coordinates with time appended as a final axis.
  Locations with_time_as_coordinate() const;
  /// The time coordinate alone, as a 1-D location set.
  Locations time_only() const;
  /// Spatial coordinates only, time dropped.
  Locations space_only() const;

  std::vector<double> mean() const;
  double diameter_upper_bound() const;  ///< bounding-box diagonal

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> times_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace vecchia
