#include "vecchia/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include "vecchia/error.hpp"

namespace vecchia {

KdTree::KdTree(const Locations& locs, std::size_t leaf_size) : locs_(&locs), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  index_.resize(locs.size());
  std::iota(index_.begin(), index_.end(), 0);
  if (!index_.empty()) build(0, index_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t d = locs_->dim();
  Node node{begin, end, -1, -1, std::vector<double>(d, std::numeric_limits<double>::infinity()),
            std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  for (std::size_t i = begin; i < end; ++i) {
    const auto p = locs_->point(static_cast<std::size_t>(index_[i]));
    for (std::size_t j = 0; j < d; ++j) {
      node.lo[j] = std::min(node.lo[j], p[j]);
      node.hi[j] = std::max(node.hi[j], p[j]);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (node.hi[j] - node.lo[j] > widest) {
      widest = node.hi[j] - node.lo[j];
      axis = j;
    }
  }
  if (widest <= 0.0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin), index_.begin() + static_cast<std::ptrdiff_t>(mid),
                   index_.begin() + static_cast<std::ptrdiff_t>(end), [&](int a, int b) {
                     return locs_->coord(static_cast<std::size_t>(a), axis) < locs_->coord(static_cast<std::size_t>(b), axis);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double KdTree::box_distance2(const Node& node, std::span<const double> q) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    double diff = 0.0;
    if (q[j] < node.lo[j]) {
      diff = node.lo[j] - q[j];
    } else if (q[j] > node.hi[j]) {
      diff = q[j] - node.hi[j];
    }
    sum += diff * diff;
  }
  return sum;
}

void KdTree::knn(std::span<const double> query, std::size_t k, std::span<const int> rank,
                 std::vector<Neighbor>& out) const {
  out.clear();
  if (query.size() != locs_->dim()) throw InvalidArgument("query dimension differs from tree");
  if (rank.size() != locs_->size()) throw InvalidArgument("rank array length differs from tree size");
  k = std::min(k, locs_->size());
  if (k == 0) return;

  auto before = [&](const Neighbor& a, const Neighbor& b) {
    if (a.distance2 != b.distance2) return a.distance2 < b.distance2;
    return rank[static_cast<std::size_t>(a.index)] < rank[static_cast<std::size_t>(b.index)];
  };
  // Max-heap on (distance2, rank): top is the current k-th best.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(before)> heap(before);

  // Depth-first with nearer child first; a node is skipped only when its box
  // is strictly farther than the current k-th distance, so tied points that
  // might win on rank are still visited.
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (heap.size() == k && box_distance2(node, query) > heap.top().distance2) continue;
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const int idx = index_[i];
        const Neighbor cand{squared_distance(query, locs_->point(static_cast<std::size_t>(idx))), idx};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (before(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    const Node& left = nodes_[static_cast<std::size_t>(node.left)];
    const Node& right = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_distance2(left, query);
    const double dr = box_distance2(right, query);
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  out.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
}

}  // namespace vecchia
