#include "vecchia/neighbors.hpp"

#include <algorithm>
#include <optional>

#include "vecchia/error.hpp"
#include "vecchia/parallel.hpp"

namespace vecchia {

NeighborSets::NeighborSets(const std::vector<std::vector<int>>& previous) {
  const std::size_t n = previous.size();
  offsets_.resize(n + 1);
  offsets_[0] = 0;
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + previous[i].size() + 1;
  sorted_.reserve(offsets_[n]);
  preference_.reserve(offsets_[n] - n);
  std::vector<int> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.assign(previous[i].begin(), previous[i].end());
    for (int j : row) {
      if (j < 0 || static_cast<std::size_t>(j) >= i) throw InvalidArgument("neighbour must precede its position");
    }
    preference_.insert(preference_.end(), row.begin(), row.end());
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end()) throw InvalidArgument("duplicate neighbour");
    sorted_.insert(sorted_.end(), row.begin(), row.end());
    sorted_.push_back(static_cast<int>(i));
  }
}

NeighborSets NeighborSets::full(std::size_t n) {
  std::vector<std::vector<int>> previous(n);
  for (std::size_t i = 0; i < n; ++i) {
    previous[i].resize(i);
    for (std::size_t j = 0; j < i; ++j) previous[i][j] = static_cast<int>(i - 1 - j);
  }
  return NeighborSets(previous);
}

std::size_t NeighborSets::max_previous() const {
  std::size_t best = 0;
  for (std::size_t i = 0; i < size(); ++i) best = std::max(best, count(i) - 1);
  return best;
}

NeighborSets NeighborSets::truncated(std::size_t m) const { return truncated(size(), m, m); }

NeighborSets NeighborSets::truncated(std::size_t split, std::size_t m_before, std::size_t m_after) const {
  std::vector<std::vector<int>> previous(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto prev = this->previous(i);
    const std::size_t keep = std::min(prev.size(), i < split ? m_before : m_after);
    previous[i].assign(prev.begin(), prev.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  return NeighborSets(previous);
}

bool NeighborSets::subset_of(const NeighborSets& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto a = set(i);
    const auto b = other.set(i);
    if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) return false;
  }
  return true;
}

namespace {

void check_inputs(const Locations& locs, const Permutation& perm, std::size_t m) {
  if (perm.size() != locs.size()) throw InvalidArgument("permutation size differs from location count");
  if (m == 0) throw InvalidArgument("need at least one neighbour");
}

// The min(m, i) earlier positions nearest to position i, by exhaustive scan.
void brute_row(const Locations& locs, const Permutation& perm, std::size_t i, std::size_t m,
               std::vector<std::pair<double, int>>& scratch, std::vector<int>& out) {
  scratch.clear();
  const auto pi = static_cast<std::size_t>(perm[i]);
  for (std::size_t j = 0; j < i; ++j) {
    scratch.emplace_back(locs.squared_distance(pi, static_cast<std::size_t>(perm[j])), static_cast<int>(j));
  }
  const std::size_t keep = std::min(m, i);
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(keep), scratch.end());
  out.clear();
  for (std::size_t k = 0; k < keep; ++k) out.push_back(scratch[k].second);
}

}  // namespace

NeighborSets nn_ordered_brute(const Locations& locs, const Permutation& perm, std::size_t m) {
  check_inputs(locs, perm, m);
  std::vector<std::vector<int>> previous(locs.size());
  std::vector<std::pair<double, int>> scratch;
  for (std::size_t i = 0; i < locs.size(); ++i) brute_row(locs, perm, i, m, scratch, previous[i]);
  return NeighborSets(previous);
}

NeighborSets nn_ordered_fast(const Locations& locs, const Permutation& perm, std::size_t m, NeighborSearchStats* stats,
                             const KdTree* tree, int threads) {
  check_inputs(locs, perm, m);
  const std::size_t n = locs.size();
  std::optional<KdTree> own;
  if (tree == nullptr) {
    own.emplace(locs);
    tree = &*own;
  } else if (tree->size() != n || tree->locations().dim() != locs.dim()) {
    throw InvalidArgument("kd-tree was built over different locations");
  }
  const std::vector<int>& rank = perm.inverse();

  std::vector<std::vector<int>> previous(n);
  std::vector<int> rounds(n, 0);
  std::vector<char> exhaustive(n, 0);

  struct Scratch {
    std::vector<KdTree::Neighbor> found;
    std::vector<std::pair<double, int>> brute;
  };
  const int workers = threads <= 0 ? default_thread_count() : threads;
  std::vector<Scratch> scratch(static_cast<std::size_t>(std::max(workers, 1)));

  parallel_for(n, workers, 256, [&](int worker, std::size_t begin, std::size_t end) {
    Scratch& s = scratch[static_cast<std::size_t>(worker)];
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t want = std::min(m, i);
      auto& row = previous[i];
      if (want == 0) continue;
      const auto query = locs.point(static_cast<std::size_t>(perm[i]));
      bool done = false;
      int round = 0;
      for (std::size_t k = 2 * m; k <= n; k *= 2) {
        ++round;
        tree->knn(query, k, rank, s.found);
        row.clear();
        for (const auto& nb : s.found) {
          const int pos = rank[static_cast<std::size_t>(nb.index)];
          if (static_cast<std::size_t>(pos) < i) {
            row.push_back(pos);
            if (row.size() == want) break;
          }
        }
        if (row.size() == want) {
          done = true;
          break;
        }
      }
      if (!done) {
        ++round;
        exhaustive[i] = 1;
        brute_row(locs, perm, i, m, s.brute, row);
      }
      rounds[i] = round;
    }
  });

  if (stats != nullptr) {
    stats->rounds = std::move(rounds);
    stats->exhaustive = static_cast<std::size_t>(std::count(exhaustive.begin(), exhaustive.end(), 1));
  }
  return NeighborSets(previous);
}

Locations neighbor_metric_locations(const Locations& locs, NeighborDistance distance) {
  if (distance == NeighborDistance::spacetime) return locs.with_time_as_coordinate();
  return locs.has_time() ? locs.space_only() : locs;
}

}  // namespace vecchia
