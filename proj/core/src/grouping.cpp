#include "vecchia/grouping.hpp"

#include <algorithm>
#include <stdexcept>

namespace vecchia {
namespace {

std::size_t union_size(std::span<const int> a, std::span<const int> b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++ia;
      ++ib;
    }
    ++count;
  }
  return count + static_cast<std::size_t>(a.end() - ia) + static_cast<std::size_t>(b.end() - ib);
}

}  // namespace

BlockPartition BlockPartition::singletons(const NeighborSets& sets) {
  BlockPartition p;
  p.sets_ = sets;
  const std::size_t n = sets.size();
  p.blocks_.resize(n);
  p.unions_.resize(n);
  p.block_of_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.blocks_[i] = {static_cast<int>(i)};
    const auto s = sets.set(i);
    p.unions_[i].assign(s.begin(), s.end());
    p.block_of_[i] = static_cast<int>(i);
  }
  return p;
}

BlockPartition group_blocks(const NeighborSets& sets, std::size_t max_rank) {
  BlockPartition p = BlockPartition::singletons(sets);
  const std::size_t n = sets.size();
  if (max_rank == 0) max_rank = sets.max_previous();

  std::vector<int> merged;
  for (std::size_t rank = 0; rank < max_rank; ++rank) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto prev = sets.previous(i);
      if (rank >= prev.size()) continue;
      const auto k = static_cast<std::size_t>(p.block_of_[i]);
      const auto k2 = static_cast<std::size_t>(p.block_of_[static_cast<std::size_t>(prev[rank])]);
      if (k == k2) continue;
      const std::size_t a = p.unions_[k].size();
      const std::size_t b = p.unions_[k2].size();
      const std::size_t u = union_size(p.unions_[k], p.unions_[k2]);
      if (u * u > a * a + b * b) continue;

      merged.clear();
      merged.reserve(u);
      std::set_union(p.unions_[k].begin(), p.unions_[k].end(), p.unions_[k2].begin(), p.unions_[k2].end(),
                     std::back_inserter(merged));
      p.unions_[k].swap(merged);
      std::vector<int>().swap(p.unions_[k2]);
      for (int member : p.blocks_[k2]) p.block_of_[static_cast<std::size_t>(member)] = static_cast<int>(k);
      p.blocks_[k].insert(p.blocks_[k].end(), p.blocks_[k2].begin(), p.blocks_[k2].end());
      std::vector<int>().swap(p.blocks_[k2]);
    }
  }

  // Drop emptied blocks, keeping surviving blocks in id order.
  std::vector<int> new_id(n, -1);
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (p.blocks_[k].empty()) continue;
    new_id[k] = static_cast<int>(next);
    if (next != k) {
      p.blocks_[next] = std::move(p.blocks_[k]);
      p.unions_[next] = std::move(p.unions_[k]);
    }
    std::sort(p.blocks_[next].begin(), p.blocks_[next].end());
    ++next;
  }
  p.blocks_.resize(next);
  p.unions_.resize(next);
  for (int& b : p.block_of_) b = new_id[static_cast<std::size_t>(b)];
  return p;
}

NeighborSets BlockPartition::expanded_sets() const {
  const std::size_t n = size();
  std::vector<std::vector<int>> previous(n);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& u = unions_[k];
    for (int member : blocks_[k]) {
      const auto pos = std::lower_bound(u.begin(), u.end(), member);
      if (pos == u.end() || *pos != member) throw std::logic_error("block member missing from its union set");
      auto& row = previous[static_cast<std::size_t>(member)];
      row.assign(u.begin(), pos);
      std::reverse(row.begin(), row.end());  // nearest in ordering first
    }
  }
  NeighborSets expanded(previous);
  if (!sets_.subset_of(expanded)) throw std::logic_error("expanded set does not contain the original set");
  return expanded;
}

GroupStats BlockPartition::stats() const {
  GroupStats s;
  s.blocks = blocks_.size();
  for (const auto& u : unions_) {
    s.mean_union += static_cast<double>(u.size());
    s.max_union = std::max(s.max_union, u.size());
    s.memory += u.size() * u.size();
  }
  if (s.blocks > 0) s.mean_union /= static_cast<double>(s.blocks);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& u = unions_[k];
    for (int member : blocks_[k]) {
      const auto count = static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), member) - u.begin());
      s.mean_expanded += static_cast<double>(count);
      s.max_expanded = std::max(s.max_expanded, count);
    }
  }
  if (size() > 0) s.mean_expanded /= static_cast<double>(size());
  for (std::size_t i = 0; i < sets_.size(); ++i) s.baseline_memory += sets_.count(i) * sets_.count(i);
  return s;
}

}  // namespace vecchia
