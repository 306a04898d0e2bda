#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecchia/locations.hpp"

namespace vecchia {

/// Static kd-tree over a point set for exact k-nearest-neighbour queries.
///
/// Results are ordered lexicographically by (squared distance, rank[index])
/// where `rank` is supplied per query. Passing the inverse of an ordering
/// permutation makes distance ties resolve by position in that ordering, so
/// a query returns exactly the first k points under that total order.
class KdTree {
 public:
  struct Neighbor {
    double distance2;
    int index;
  };

  explicit KdTree(const Locations& locs, std::size_t leaf_size = 16);

  std::size_t size() const { return locs_->size(); }
  const Locations& locations() const { return *locs_; }

  /// The k smallest points under (distance2, rank[index]), sorted ascending.
  void knn(std::span<const double> query, std::size_t k, std::span<const int> rank, std::vector<Neighbor>& out) const;

 private:
  struct Node {
    std::size_t begin, end;  // range in index_
    int left = -1, right = -1;
    std::vector<double> lo, hi;  // bounding box
  };

  int build(std::size_t begin, std::size_t end);
  double box_distance2(const Node& node, std::span<const double> q) const;

  const Locations* locs_;
  std::size_t leaf_size_;
  std::vector<int> index_;
  std::vector<Node> nodes_;
};

}  // namespace vecchia
