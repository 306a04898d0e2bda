#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vecchia/locations.hpp"
#include "vecchia/random.hpp"

namespace vecchia {

/// A bijection on {0, ..., n-1}. forward()[i] is the original index placed
/// at position i; inverse()[j] is the position of original index j.
class Permutation {
 public:
  Permutation() = default;
  /// Throws InvalidArgument unless `forward` is a bijection.
  explicit Permutation(std::vector<int> forward);
  static Permutation identity(std::size_t n);

  std::size_t size() const { return forward_.size(); }
  const std::vector<int>& forward() const { return forward_; }
  const std::vector<int>& inverse() const { return inverse_; }
  int operator[](std::size_t position) const { return forward_[position]; }

  /// values[forward[i]] for each position i.
  std::vector<double> apply(std::span<const double> values) const;
  /// Inverse of apply(): out[forward[i]] = permuted[i].
  std::vector<double> unapply(std::span<const double> permuted) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> forward_;
  std::vector<int> inverse_;
};

enum class OrderingScheme { coordinate, sum, middle_out, random, mmd, ammd };

std::string_view to_string(OrderingScheme scheme);
std::optional<OrderingScheme> parse_ordering(std::string_view name);

/// Sort key for order_sorted_coordinate: one axis, or the sum of all axes.
struct SortKey {
  static constexpr std::size_t sum = static_cast<std::size_t>(-1);
  std::size_t axis = 0;
};

/// Ascending by one coordinate (or coordinate sum); ties by original index.
Permutation order_sorted_coordinate(const Locations& locs, SortKey key = {});

/// Ascending distance to `center` (default: coordinate mean); ties by index.
Permutation order_middle_out(const Locations& locs, std::optional<std::vector<double>> center = std::nullopt);

/// Uniformly random permutation by Fisher-Yates on a seeded Philox stream.
Permutation order_random(std::size_t n, std::uint64_t seed, std::uint64_t stream = streams::random_ordering);

/// Exact maximum-minimum-distance ordering in O(n^2): the first point is
/// nearest `center`, each later point maximizes its minimum distance to the
/// points already chosen. Ties go to the lowest original index.
Permutation order_mmd_exact(const Locations& locs, std::optional<std::vector<double>> center = std::nullopt);

struct AmmdOptions {
  std::size_t points_per_box = 16;
  /// Box centers are themselves ordered by AMMD above this many boxes.
  std::size_t exact_box_limit = 4096;
};

/// Grid-box approximation to the MMD ordering. Points are binned into
/// about n / points_per_box boxes, non-empty boxes are MMD-ordered by their
/// centers, and the boxes are visited cyclically; each visit emits the
/// remaining point of that box farthest from points already chosen in the
/// 3^d surrounding boxes. With a single box this reproduces order_mmd_exact.
Permutation order_ammd(const Locations& locs, const AmmdOptions& options = {});

/// Dispatch by scheme. `seed` only matters for OrderingScheme::random.
Permutation make_ordering(OrderingScheme scheme, const Locations& locs, std::uint64_t seed = 0);

}  // namespace vecchia
