#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecchia/kdtree.hpp"
#include "vecchia/locations.hpp"
#include "vecchia/ordering.hpp"

namespace vecchia {

/// Conditioning sets J_i over positions 0..n-1 of an ordering.
///
/// set(i) is sorted ascending, every element is <= i and i itself is the last
/// element. previous(i) lists the same neighbours without i, in preference
/// order (nearest first for nearest-neighbour sets); the grouping pass walks
/// neighbours in this order.
class NeighborSets {
 public:
  NeighborSets() = default;
  /// previous[i] holds distinct positions < i, in preference order.
  explicit NeighborSets(const std::vector<std::vector<int>>& previous);

  /// Every earlier position (J_i = {0..i}).
  static NeighborSets full(std::size_t n);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const int> set(std::size_t i) const {
    return {sorted_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const int> previous(std::size_t i) const {
    return {preference_.data() + offsets_[i] - i, offsets_[i + 1] - offsets_[i] - 1};
  }
  std::size_t count(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  std::size_t max_previous() const;
  std::size_t total_entries() const { return sorted_.size(); }

  /// Keep at most m previous neighbours per position, by preference order.
  NeighborSets truncated(std::size_t m) const;
  /// Same previous-neighbour limit split by position: positions below
  /// `split` keep at most m_before, the rest at most m_after.
  NeighborSets truncated(std::size_t split, std::size_t m_before, std::size_t m_after) const;

  /// True when set(i) is contained in other.set(i) for every i.
  bool subset_of(const NeighborSets& other) const;

  friend bool operator==(const NeighborSets& a, const NeighborSets& b) {
    return a.offsets_ == b.offsets_ && a.sorted_ == b.sorted_ && a.preference_ == b.preference_;
  }

 private:
  std::vector<std::size_t> offsets_;  // into sorted_, n + 1 entries
  std::vector<int> sorted_;
  std::vector<int> preference_;  // previous neighbours only; row i starts at offsets_[i] - i
};

/// Which coordinates define "nearest" when locations carry time.
enum class NeighborDistance { spatial, spacetime };

/// Reference search: for each position i, the min(m, i) earlier positions
/// nearest to it, ties broken by smaller position. O(n^2 log n).
NeighborSets nn_ordered_brute(const Locations& locs, const Permutation& perm, std::size_t m);

struct NeighborSearchStats {
  std::vector<int> rounds;        ///< per position: doubling rounds used (0 for position 0)
  std::size_t exhaustive = 0;     ///< positions that fell back to an exhaustive scan
};

/// Same result as nn_ordered_brute, using k-nearest queries over all points
/// with k = 2m, 4m, ... until m earlier points are found; points still
/// unresolved when k would exceed n are scanned exhaustively.
/// `tree` may be supplied to reuse one built over `locs`.
NeighborSets nn_ordered_fast(const Locations& locs, const Permutation& perm, std::size_t m,
                             NeighborSearchStats* stats = nullptr, const KdTree* tree = nullptr, int threads = 1);

/// Locations used for the neighbour metric.
Locations neighbor_metric_locations(const Locations& locs, NeighborDistance distance);

}  // namespace vecchia
