#pragma once

#include "vecchia/bessel.hpp"
#include "vecchia/covariance.hpp"
#include "vecchia/dataset.hpp"
#include "vecchia/error.hpp"
#include "vecchia/grouping.hpp"
#include "vecchia/inference.hpp"
#include "vecchia/inverse_cholesky.hpp"
#include "vecchia/kdtree.hpp"
#include "vecchia/locations.hpp"
#include "vecchia/neighbors.hpp"
#include "vecchia/optimize.hpp"
#include "vecchia/ordering.hpp"
#include "vecchia/parallel.hpp"
#include "vecchia/quality.hpp"
#include "vecchia/random.hpp"
#include "vecchia/simulate.hpp"
#include "vecchia/structure.hpp"

namespace vecchia {

inline constexpr const char* version() { return VECCHIA_VERSION_STRING; }

}  // namespace vecchia
