#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "vecchia/error.hpp"
#include "vecchia/neighbors.hpp"

using namespace vecchia;

namespace {

std::vector<std::vector<int>> as_sets(const NeighborSets& s) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.emplace_back(s.set(i).begin(), s.set(i).end());
  return out;
}

}  // namespace

TEST(NeighborSets, LayoutAndValidation) {
  const NeighborSets s({{}, {0}, {1, 0}, {1}});
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(std::vector<int>(s.set(2).begin(), s.set(2).end()), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(std::vector<int>(s.previous(2).begin(), s.previous(2).end()), (std::vector<int>{1, 0}));
  EXPECT_EQ(s.max_previous(), 2u);
  EXPECT_EQ(s.total_entries(), 8u);
  EXPECT_THROW(NeighborSets({{}, {1}}), InvalidArgument);
  EXPECT_THROW(NeighborSets({{}, {0}, {0, 0}}), InvalidArgument);
  EXPECT_THROW(NeighborSets({{}, {-1}}), InvalidArgument);
}

TEST(NeighborSets, TruncationKeepsPreferenceOrder) {
  const NeighborSets s({{}, {0}, {1, 0}, {0, 2, 1}});
  const auto t = s.truncated(1);
  EXPECT_EQ(std::vector<int>(t.set(3).begin(), t.set(3).end()), (std::vector<int>{0, 3}));
  EXPECT_TRUE(t.subset_of(s));
  EXPECT_FALSE(s.subset_of(t));
  const auto split = s.truncated(3, 2, 0);
  EXPECT_EQ(split.count(3), 1u);
  EXPECT_EQ(split.count(2), 3u);
  EXPECT_EQ(NeighborSets::full(4).count(3), 4u);
}

TEST(BruteNeighbors, Examples) {
  const auto locs = oracle::uniform_points(10, 2, 1);
  const auto perm = Permutation::identity(10);
  const auto s = nn_ordered_brute(locs, perm, 5);
  EXPECT_EQ(s.count(0), 1u);
  EXPECT_EQ(s.count(2), 3u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(s.count(i), std::min<std::size_t>(5, i) + 1);
}

TEST(BruteNeighbors, SortedOneDimensionalUsesPredecessor) {
  const auto locs = oracle::uniform_points(50, 1, 2);
  const auto perm = order_sorted_coordinate(locs);
  const auto s = nn_ordered_brute(locs, perm, 1);
  for (std::size_t i = 1; i < 50; ++i) {
    EXPECT_EQ(std::vector<int>(s.set(i).begin(), s.set(i).end()),
              (std::vector<int>{static_cast<int>(i) - 1, static_cast<int>(i)}));
  }
}

TEST(BruteNeighbors, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto locs = oracle::uniform_points(80, 1 + seed % 4, seed);
    const auto perm = order_random(80, seed);
    EXPECT_EQ(as_sets(nn_ordered_brute(locs, perm, 7)), oracle::ordered_neighbors(locs, perm, 7));
  }
}

TEST(BruteNeighbors, PreferenceIsNearestFirst) {
  const auto locs = oracle::uniform_points(60, 2, 6);
  const auto perm = order_random(60, 6);
  const auto s = nn_ordered_brute(locs, perm, 10);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto prev = s.previous(i);
    for (std::size_t k = 1; k < prev.size(); ++k) {
      const double a = locs.squared_distance(perm[i], perm[prev[k - 1]]);
      const double b = locs.squared_distance(perm[i], perm[prev[k]]);
      EXPECT_TRUE(a < b || (a == b && prev[k - 1] < prev[k]));
    }
  }
}

TEST(FastNeighbors, EqualsBruteOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Philox rng(seed, 5);
    const std::size_t n = 20 + rng.bounded(300);
    const std::size_t d = 1 + rng.bounded(4);
    const std::size_t m = 1 + rng.bounded(30);
    const auto locs = oracle::uniform_points(n, d, seed);
    const auto perm = seed % 2 == 0 ? order_random(n, seed) : order_ammd(locs);
    EXPECT_EQ(nn_ordered_fast(locs, perm, m), nn_ordered_brute(locs, perm, m)) << seed;
  }
}

TEST(FastNeighbors, EqualsBruteWithTiesAndDuplicates) {
  const auto grid = Locations::regular_grid({15, 15});
  for (auto scheme : {OrderingScheme::coordinate, OrderingScheme::mmd, OrderingScheme::middle_out}) {
    const auto perm = make_ordering(scheme, grid);
    EXPECT_EQ(nn_ordered_fast(grid, perm, 12), nn_ordered_brute(grid, perm, 12));
  }
  std::vector<double> c;
  for (int i = 0; i < 120; ++i) {
    c.push_back((i % 6) * 0.25);
    c.push_back((i % 4) * 0.25);
  }
  const Locations dup(2, c);
  const auto perm = order_random(120, 3);
  EXPECT_EQ(nn_ordered_fast(dup, perm, 9), nn_ordered_brute(dup, perm, 9));
}

TEST(FastNeighbors, ThreadsAndTreeReuse) {
  const auto locs = oracle::uniform_points(400, 2, 8);
  const KdTree tree(locs);
  const auto perm = order_ammd(locs);
  const auto serial = nn_ordered_fast(locs, perm, 15);
  EXPECT_EQ(nn_ordered_fast(locs, perm, 15, nullptr, &tree, 4), serial);
  EXPECT_EQ(nn_ordered_fast(locs, order_random(400, 1), 15, nullptr, &tree),
            nn_ordered_brute(locs, order_random(400, 1), 15));
  const KdTree other(oracle::uniform_points(10, 2, 1));
  EXPECT_THROW(nn_ordered_fast(locs, perm, 15, nullptr, &other), InvalidArgument);
}

TEST(FastNeighbors, LatePointsResolveInFirstRound) {
  // Among the 2m nearest points of position i, about 2m * i / n come earlier,
  // so the first round suffices for most points in the second half of the
  // ordering. Thresholds measured on this grid: past 2m, 52-62% resolve in
  // round one; past n/2, 92-100%.
  const auto grid = Locations::regular_grid({30, 30});
  const std::size_t m = 10;
  for (auto scheme : {OrderingScheme::random, OrderingScheme::ammd, OrderingScheme::mmd}) {
    NeighborSearchStats stats;
    nn_ordered_fast(grid, make_ordering(scheme, grid, 2), m, &stats);
    ASSERT_EQ(stats.rounds.size(), grid.size());
    EXPECT_EQ(stats.rounds[0], 0);
    std::size_t past_2m = 0;
    std::size_t past_2m_first = 0;
    std::size_t second_half = 0;
    std::size_t second_half_first = 0;
    for (std::size_t i = 2 * m + 1; i < grid.size(); ++i) {
      ++past_2m;
      past_2m_first += stats.rounds[i] == 1;
      if (i >= grid.size() / 2) {
        ++second_half;
        second_half_first += stats.rounds[i] == 1;
      }
    }
    EXPECT_GE(static_cast<double>(past_2m_first), 0.5 * static_cast<double>(past_2m)) << to_string(scheme);
    EXPECT_GE(static_cast<double>(second_half_first), 0.9 * static_cast<double>(second_half)) << to_string(scheme);
  }
}

TEST(FastNeighbors, SizesAndSaturation) {
  const auto locs = oracle::uniform_points(100, 3, 12);
  const auto s = nn_ordered_fast(locs, order_random(100, 2), 8);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GE(s.count(i), s.count(i - 1));
  EXPECT_EQ(s.count(99), 9u);
  // m beyond n - 1 falls back to exhaustive scans and yields full sets.
  NeighborSearchStats stats;
  const auto all = nn_ordered_fast(locs, Permutation::identity(100), 200, &stats);
  EXPECT_EQ(all, nn_ordered_brute(locs, Permutation::identity(100), 200));
  EXPECT_EQ(all.count(99), 100u);
  EXPECT_GT(stats.exhaustive, 0u);
}

TEST(NeighborMetric, SpaceTimeChoices) {
  const Locations st(2, {0.0, 0.0, 1.0, 1.0}, {5.0, 6.0});
  EXPECT_EQ(neighbor_metric_locations(st, NeighborDistance::spatial).dim(), 2u);
  EXPECT_EQ(neighbor_metric_locations(st, NeighborDistance::spacetime).dim(), 3u);
}
