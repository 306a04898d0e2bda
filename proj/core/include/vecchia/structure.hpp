#pragma once

#include <cstddef>
#include <optional>

#include "vecchia/grouping.hpp"
#include "vecchia/inverse_cholesky.hpp"
#include "vecchia/neighbors.hpp"
#include "vecchia/ordering.hpp"

namespace vecchia {

struct StructureOptions {
  std::size_t m = 30;  ///< previous neighbours per point
  bool grouped = true;
  NeighborDistance distance = NeighborDistance::spatial;
  int threads = 0;
};

/// The parameter-independent part of a Vecchia approximation: ordering,
/// neighbour sets and (optionally) the block partition. Reused across every
/// likelihood evaluation with the same m.
class VecchiaStructure {
 public:
  VecchiaStructure(const Locations& locs, Permutation perm, const StructureOptions& options);
  VecchiaStructure(Permutation perm, NeighborSets sets, bool grouped);

  const Permutation& permutation() const { return perm_; }
  const NeighborSets& sets() const { return sets_; }
  bool grouped() const { return blocks_.has_value(); }
  const BlockPartition& blocks() const { return *blocks_; }
  ConditioningRef conditioning() const {
    return grouped() ? ConditioningRef(*blocks_) : ConditioningRef(sets_);
  }

  SparseInverseCholesky build(const CovarianceModel& model, const Locations& locs, int threads = 0) const {
    return build_gamma_tilde(model, locs, perm_, conditioning(), threads);
  }

 private:
  Permutation perm_;
  NeighborSets sets_;
  std::optional<BlockPartition> blocks_;
};

}  // namespace vecchia
