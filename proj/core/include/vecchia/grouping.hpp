#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecchia/neighbors.hpp"

namespace vecchia {

struct GroupStats {
  std::size_t blocks = 0;        ///< K
  double mean_union = 0.0;       ///< mean #U_k
  std::size_t max_union = 0;     ///< max #U_k
  double mean_expanded = 0.0;    ///< mean #Jbar_i
  std::size_t max_expanded = 0;  ///< max #Jbar_i
  std::size_t memory = 0;        ///< sum_k (#U_k)^2
  std::size_t baseline_memory = 0;  ///< sum_i (#J_i)^2
};

/// Partition of positions 0..n-1 into blocks B_k, each with the union U_k of
/// its members' conditioning sets. The expanded set of a member i is
/// Jbar_i = { j in U_k : j <= i }.
class BlockPartition {
 public:
  BlockPartition() = default;
  /// Every position in its own block (Jbar = J).
  static BlockPartition singletons(const NeighborSets& sets);

  std::size_t size() const { return block_of_.size(); }
  std::size_t block_count() const { return blocks_.size(); }
  /// Members of block k, ascending.
  std::span<const int> block(std::size_t k) const { return blocks_[k]; }
  /// U_k, ascending; its last element is the largest member.
  std::span<const int> union_set(std::size_t k) const { return unions_[k]; }
  int block_of(std::size_t i) const { return block_of_[i]; }
  const NeighborSets& base_sets() const { return sets_; }

  /// The expanded conditioning sets Jbar_i. Verifies J_i is contained in
  /// Jbar_i and throws std::logic_error otherwise.
  NeighborSets expanded_sets() const;
  GroupStats stats() const;

 private:
  friend BlockPartition group_blocks(const NeighborSets& sets, std::size_t max_rank);

  NeighborSets sets_;
  std::vector<std::vector<int>> blocks_;
  std::vector<std::vector<int>> unions_;
  std::vector<int> block_of_;
};

/// Greedy grouping: start from singletons; for rank l = 1..max_rank and each
/// position i with an l-th neighbour j, merge the blocks holding i and j when
/// (#(U_k u U_k'))^2 <= (#U_k)^2 + (#U_k')^2. The l-th neighbour is the l-th
/// entry of sets.previous(i); positions with fewer neighbours are skipped.
/// max_rank = 0 means sets.max_previous().
BlockPartition group_blocks(const NeighborSets& sets, std::size_t max_rank = 0);

/// Jbar view of a partition, as consumed by the ungrouped builder.
inline NeighborSets build_grouped_sets(const BlockPartition& blocks) { return blocks.expanded_sets(); }

}  // namespace vecchia
