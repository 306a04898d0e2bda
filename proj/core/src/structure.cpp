#include "vecchia/structure.hpp"

#include <algorithm>

#include "vecchia/error.hpp"

namespace vecchia {

VecchiaStructure::VecchiaStructure(const Locations& locs, Permutation perm, const StructureOptions& options)
    : perm_(std::move(perm)) {
  if (perm_.size() != locs.size()) throw InvalidArgument("permutation size differs from location count");
  const std::size_t m = std::min(options.m, locs.empty() ? std::size_t{0} : locs.size() - 1);
  const Locations metric = neighbor_metric_locations(locs, options.distance);
  sets_ = nn_ordered_fast(metric, perm_, m, nullptr, nullptr, options.threads);
  if (options.grouped) blocks_ = group_blocks(sets_);
}

VecchiaStructure::VecchiaStructure(Permutation perm, NeighborSets sets, bool grouped)
    : perm_(std::move(perm)), sets_(std::move(sets)) {
  if (perm_.size() != sets_.size()) throw InvalidArgument("permutation size differs from neighbour sets");
  if (grouped) blocks_ = group_blocks(sets_);
}

}  // namespace vecchia
