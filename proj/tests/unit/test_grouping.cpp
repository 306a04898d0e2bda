#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "vecchia/grouping.hpp"

using namespace vecchia;

namespace {

// Positions 0..m-1 without neighbours; position m conditions on all of
// them; position m+1 on nothing; position m+2 on {2..m+1} with m listed
// first. With max_rank 1 the only nontrivial decision is whether the block
// holding m absorbs m+2, whose union has m+3 elements against m+1 each.
NeighborSets two_window_instance(int m) {
  std::vector<std::vector<int>> prev(static_cast<std::size_t>(m + 3));
  for (int j = m - 1; j >= 0; --j) prev[static_cast<std::size_t>(m)].push_back(j);
  prev[static_cast<std::size_t>(m + 2)].push_back(m);
  prev[static_cast<std::size_t>(m + 2)].push_back(m + 1);
  for (int j = m - 1; j >= 2; --j) prev[static_cast<std::size_t>(m + 2)].push_back(j);
  return NeighborSets(prev);
}

void check_partition_invariants(const BlockPartition& b) {
  const NeighborSets& sets = b.base_sets();
  std::vector<int> seen(b.size(), 0);
  std::size_t memory = 0;
  std::size_t baseline = 0;
  for (std::size_t k = 0; k < b.block_count(); ++k) {
    const auto block = b.block(k);
    const auto u = b.union_set(k);
    ASSERT_FALSE(block.empty());
    EXPECT_TRUE(std::is_sorted(block.begin(), block.end()));
    EXPECT_TRUE(std::adjacent_find(u.begin(), u.end(), std::greater_equal<>()) == u.end());
    EXPECT_EQ(u.back(), block.back());
    for (int i : block) {
      ++seen[static_cast<std::size_t>(i)];
      EXPECT_EQ(b.block_of(static_cast<std::size_t>(i)), static_cast<int>(k));
    }
    memory += u.size() * u.size();
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(seen[i], 1);
    baseline += sets.count(i) * sets.count(i);
  }
  EXPECT_LE(memory, baseline);
  const auto stats = b.stats();
  EXPECT_EQ(stats.memory, memory);
  EXPECT_EQ(stats.baseline_memory, baseline);

  const NeighborSets expanded = b.expanded_sets();
  EXPECT_TRUE(sets.subset_of(expanded));
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto s = expanded.set(i);
    EXPECT_EQ(static_cast<std::size_t>(s.back()), i);
  }
  EXPECT_EQ(b.expanded_sets(), expanded);
}

}  // namespace

TEST(Grouping, SinglePoint) {
  const auto b = group_blocks(NeighborSets(std::vector<std::vector<int>>(1)));
  EXPECT_EQ(b.block_count(), 1u);
  EXPECT_EQ(b.block(0).size(), 1u);
}

TEST(Grouping, MergeRuleOnShiftedWindows) {
  for (int m : {2, 3, 4, 5, 8}) {
    const auto sets = two_window_instance(m);
    const auto b = group_blocks(sets, 1);
    const bool merged = b.block_of(static_cast<std::size_t>(m)) == b.block_of(static_cast<std::size_t>(m + 2));
    EXPECT_EQ(merged, (m + 3) * (m + 3) <= 2 * (m + 1) * (m + 1)) << "m=" << m;
    EXPECT_EQ(merged, m > 3) << "m=" << m;
    check_partition_invariants(b);
  }
}

TEST(Grouping, SingletonsReproduceSets) {
  const auto locs = oracle::uniform_points(50, 2, 3);
  const auto sets = nn_ordered_brute(locs, order_random(50, 3), 6);
  const auto b = BlockPartition::singletons(sets);
  EXPECT_EQ(b.block_count(), 50u);
  const auto expanded = b.expanded_sets();
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_TRUE(std::ranges::equal(expanded.set(i), sets.set(i)));
  }
  check_partition_invariants(b);
}

TEST(Grouping, NestedPairImprovesMemory) {
  // J_2 = {0,1,2} contains J_1 = {0,1}: the union adds nothing.
  const NeighborSets sets({{}, {0}, {1, 0}});
  const auto b = group_blocks(sets);
  EXPECT_EQ(b.block_of(1), b.block_of(2));
  const auto stats = b.stats();
  EXPECT_LT(stats.memory, stats.baseline_memory);
}

TEST(Grouping, InvariantsOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 100 + 40 * seed;
    const auto locs = oracle::uniform_points(n, 1 + seed % 3, seed);
    const auto perm = seed % 2 ? order_ammd(locs) : order_random(n, seed);
    const auto sets = nn_ordered_fast(locs, perm, 3 + seed);
    check_partition_invariants(group_blocks(sets));
    check_partition_invariants(group_blocks(sets, 2));
  }
}

TEST(Grouping, EarlyPositionsFormOneBlock) {
  // While every earlier position sits in one block with U = {0..i-1},
  // position i adds a single element: (i + 1)^2 <= i^2 + (m + 1)^2 holds
  // exactly up to i = ((m + 1)^2 - 1) / 2, which fixes the first block.
  for (std::size_t m : {5, 10, 30}) {
    const auto locs = oracle::uniform_points(2000, 2, m);
    const auto sets = nn_ordered_fast(locs, order_random(2000, m), m);
    const auto b = group_blocks(sets);
    const std::size_t last = ((m + 1) * (m + 1) - 1) / 2;
    const auto first = b.block(static_cast<std::size_t>(b.block_of(0)));
    ASSERT_GE(first.size(), last + 1) << m;
    for (std::size_t i = 0; i <= last; ++i) EXPECT_EQ(first[i], static_cast<int>(i));
    EXPECT_EQ(b.union_set(static_cast<std::size_t>(b.block_of(0))).size(), last + 1) << m;
  }
}

TEST(Grouping, GridReferenceValues) {
  // 30x30 grid, exact maximin ordering, m = 30; values from this algorithm,
  // frozen after verification against the invariants above.
  const auto grid = Locations::regular_grid({30, 30});
  const auto perm = order_mmd_exact(grid);
  const auto b = group_blocks(nn_ordered_fast(grid, perm, 30));
  check_partition_invariants(b);
  const auto stats = b.stats();
  EXPECT_EQ(stats.blocks, 29u);
  EXPECT_EQ(stats.max_union, 481u);
  EXPECT_NEAR(stats.mean_union, 93.3793, 1e-4);
  EXPECT_NEAR(stats.mean_expanded, 166.8633, 1e-4);
  EXPECT_LE(stats.memory, grid.size() * 31 * 31);
}
