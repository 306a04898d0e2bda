#include "vecchia/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vecchia/error.hpp"
#include "vecchia/random.hpp"

namespace vecchia {

Permutation::Permutation(std::vector<int> forward) : forward_(std::move(forward)), inverse_(forward_.size(), -1) {
  const auto n = static_cast<int>(forward_.size());
  for (int i = 0; i < n; ++i) {
    const int j = forward_[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n || inverse_[static_cast<std::size_t>(j)] != -1) {
      throw InvalidArgument("permutation is not a bijection");
    }
    inverse_[static_cast<std::size_t>(j)] = i;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> forward(n);
  std::iota(forward.begin(), forward.end(), 0);
  return Permutation(std::move(forward));
}

std::vector<double> Permutation::apply(std::span<const double> values) const {
  if (values.size() != size()) throw InvalidArgument("vector length differs from permutation size");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = values[static_cast<std::size_t>(forward_[i])];
  return out;
}

std::vector<double> Permutation::unapply(std::span<const double> permuted) const {
  if (permuted.size() != size()) throw InvalidArgument("vector length differs from permutation size");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<std::size_t>(forward_[i])] = permuted[i];
  return out;
}

std::string_view to_string(OrderingScheme scheme) {
  switch (scheme) {
    case OrderingScheme::coordinate:
      return "coord";
    case OrderingScheme::sum:
      return "sum";
    case OrderingScheme::middle_out:
      return "middle";
    case OrderingScheme::random:
      return "random";
    case OrderingScheme::mmd:
      return "mmd";
    case OrderingScheme::ammd:
      return "ammd";
  }
  return "unknown";
}

std::optional<OrderingScheme> parse_ordering(std::string_view name) {
  for (auto s : {OrderingScheme::coordinate, OrderingScheme::sum, OrderingScheme::middle_out, OrderingScheme::random,
                 OrderingScheme::mmd, OrderingScheme::ammd}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

namespace {

std::vector<int> iota_indices(std::size_t n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

Permutation sort_by_key(std::vector<double> key) {
  std::vector<int> idx = iota_indices(key.size());
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });
  return Permutation(std::move(idx));
}

std::vector<double> resolve_center(const Locations& locs, const std::optional<std::vector<double>>& center) {
  if (!center) return locs.mean();
  if (center->size() != locs.dim()) throw InvalidArgument("center dimension differs from locations");
  return *center;
}

}  // namespace

Permutation order_sorted_coordinate(const Locations& locs, SortKey key) {
  if (key.axis != SortKey::sum && key.axis >= locs.dim()) throw InvalidArgument("sort axis out of range");
  std::vector<double> values(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    if (key.axis == SortKey::sum) {
      const auto p = locs.point(i);
      values[i] = std::accumulate(p.begin(), p.end(), 0.0);
    } else {
      values[i] = locs.coord(i, key.axis);
    }
  }
  return sort_by_key(std::move(values));
}

Permutation order_middle_out(const Locations& locs, std::optional<std::vector<double>> center) {
  const std::vector<double> c = resolve_center(locs, center);
  std::vector<double> values(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) values[i] = squared_distance(locs.point(i), c);
  return sort_by_key(std::move(values));
}

Permutation order_random(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  if (n == 0) throw InvalidArgument("random ordering needs n >= 1");
  std::vector<int> idx = iota_indices(n);
  Philox rng(seed, stream);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return Permutation(std::move(idx));
}

Permutation order_mmd_exact(const Locations& locs, std::optional<std::vector<double>> center) {
  const std::size_t n = locs.size();
  if (n == 0) return Permutation();
  const std::vector<double> c = resolve_center(locs, center);

  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = squared_distance(locs.point(i), c);
    if (d < best) {
      best = d;
      first = i;
    }
  }

  std::vector<int> order;
  order.reserve(n);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::size_t current = first;
  for (;;) {
    order.push_back(static_cast<int>(current));
    chosen[current] = 1;
    if (order.size() == n) break;
    std::size_t next = n;
    double farthest = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      const double d = locs.squared_distance(i, current);
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > farthest) {
        farthest = min_dist[i];
        next = i;
      }
    }
    current = next;
  }
  return Permutation(std::move(order));
}

namespace {

struct BoxGrid {
  std::size_t dim = 0;
  std::vector<double> lo;
  std::vector<double> width;            // box width per axis (0 for flat axes)
  std::vector<std::size_t> cells;       // boxes per axis
  std::vector<std::size_t> stride;
  std::vector<std::size_t> box_of;      // per point, linear box id
};

BoxGrid make_grid(const Locations& locs, std::size_t target_boxes) {
  const std::size_t n = locs.size();
  const std::size_t d = locs.dim();
  BoxGrid grid;
  grid.dim = d;
  grid.lo.assign(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      grid.lo[j] = std::min(grid.lo[j], locs.coord(i, j));
      hi[j] = std::max(hi[j], locs.coord(i, j));
    }
  }
  std::vector<double> side(d);
  double volume = 1.0;
  std::size_t active = 0;
  for (std::size_t j = 0; j < d; ++j) {
    side[j] = hi[j] - grid.lo[j];
    if (side[j] > 0.0) {
      volume *= side[j];
      ++active;
    }
  }
  grid.cells.assign(d, 1);
  if (active > 0 && target_boxes > 1) {
    const double scale = std::pow(static_cast<double>(target_boxes) / volume, 1.0 / static_cast<double>(active));
    for (std::size_t j = 0; j < d; ++j) {
      if (side[j] > 0.0) grid.cells[j] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(side[j] * scale)));
    }
  }
  grid.width.resize(d);
  grid.stride.resize(d);
  std::size_t stride = 1;
  for (std::size_t j = 0; j < d; ++j) {
    grid.width[j] = side[j] > 0.0 ? side[j] / static_cast<double>(grid.cells[j]) : 0.0;
    grid.stride[j] = stride;
    stride *= grid.cells[j];
  }
  grid.box_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t id = 0;
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t k = 0;
      if (grid.width[j] > 0.0) {
        const double t = std::floor((locs.coord(i, j) - grid.lo[j]) / grid.width[j]);
        k = std::min(grid.cells[j] - 1, static_cast<std::size_t>(std::max(0.0, t)));
      }
      id += k * grid.stride[j];
    }
    grid.box_of[i] = id;
  }
  return grid;
}

}  // namespace

Permutation order_ammd(const Locations& locs, const AmmdOptions& options) {
  const std::size_t n = locs.size();
  if (n == 0) return Permutation();
  const std::size_t d = locs.dim();
  if (d > 4) throw InvalidArgument("AMMD ordering supports at most 4 dimensions");
  const std::size_t per_box = std::max<std::size_t>(options.points_per_box, 1);
  const std::size_t target_boxes = (n + per_box - 1) / per_box;
  const BoxGrid grid = make_grid(locs, target_boxes);

  // Non-empty boxes, each holding its points in ascending index order.
  std::vector<int> by_box = iota_indices(n);
  std::stable_sort(by_box.begin(), by_box.end(), [&](int a, int b) {
    return grid.box_of[static_cast<std::size_t>(a)] < grid.box_of[static_cast<std::size_t>(b)];
  });
  std::vector<std::size_t> box_ids;
  std::vector<std::vector<int>> members;
  for (int p : by_box) {
    const std::size_t id = grid.box_of[static_cast<std::size_t>(p)];
    if (box_ids.empty() || box_ids.back() != id) {
      box_ids.push_back(id);
      members.emplace_back();
    }
    members.back().push_back(p);
  }
  const std::size_t boxes = box_ids.size();

  // Order box centers.
  std::vector<double> centers(boxes * d);
  for (std::size_t b = 0; b < boxes; ++b) {
    std::size_t rest = box_ids[b];
    for (std::size_t j = d; j-- > 0;) {
      const std::size_t k = rest / grid.stride[j];
      rest %= grid.stride[j];
      centers[b * d + j] = grid.lo[j] + (static_cast<double>(k) + 0.5) * grid.width[j];
    }
  }
  const std::vector<double> global_center = locs.mean();
  std::vector<int> box_order;
  if (boxes == 1) {
    box_order = {0};
  } else {
    const Locations center_locs(d, centers);
    const Permutation p = boxes > options.exact_box_limit ? order_ammd(center_locs, options)
                                                          : order_mmd_exact(center_locs, global_center);
    box_order = p.forward();
  }

  // Dense lookup from linear box id to slot for neighbourhood scans.
  std::size_t total_cells = 1;
  for (std::size_t c : grid.cells) total_cells *= c;
  std::vector<int> slot_of(total_cells, -1);
  for (std::size_t b = 0; b < boxes; ++b) slot_of[box_ids[b]] = static_cast<int>(b);

  std::vector<std::vector<int>> offsets;  // per-axis offsets for the 3^d neighbourhood
  {
    std::vector<int> off(d, -1);
    for (;;) {
      offsets.push_back(off);
      std::size_t j = 0;
      while (j < d && off[j] == 1) off[j++] = -1;
      if (j == d) break;
      ++off[j];
    }
  }

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::vector<int> order;
  order.reserve(n);

  auto update_neighbours = [&](std::size_t point) {
    const std::size_t id = grid.box_of[point];
    std::vector<std::size_t> coord(d);
    std::size_t rest = id;
    for (std::size_t j = d; j-- > 0;) {
      coord[j] = rest / grid.stride[j];
      rest %= grid.stride[j];
    }
    for (const auto& off : offsets) {
      std::size_t nb = 0;
      bool inside = true;
      for (std::size_t j = 0; j < d && inside; ++j) {
        const auto k = static_cast<long long>(coord[j]) + off[j];
        if (k < 0 || k >= static_cast<long long>(grid.cells[j])) inside = false;
        nb += static_cast<std::size_t>(k) * grid.stride[j];
      }
      if (!inside) continue;
      const int slot = slot_of[nb];
      if (slot < 0) continue;
      for (int q : members[static_cast<std::size_t>(slot)]) {
        const auto uq = static_cast<std::size_t>(q);
        if (chosen[uq]) continue;
        const double dist = locs.squared_distance(point, uq);
        if (dist < min_dist[uq]) min_dist[uq] = dist;
      }
    }
  };

  std::vector<std::size_t> remaining(boxes);
  for (std::size_t b = 0; b < boxes; ++b) remaining[b] = members[b].size();
  std::vector<int> cycle(box_order.begin(), box_order.end());
  while (order.size() < n) {
    for (int slot : cycle) {
      const auto b = static_cast<std::size_t>(slot);
      if (remaining[b] == 0) continue;
      // Farthest remaining point from chosen neighbours; with none chosen
      // nearby, the point nearest the global center (first pick) or the box
      // center.
      int pick = -1;
      double farthest = -1.0;
      for (int q : members[b]) {
        const auto uq = static_cast<std::size_t>(q);
        if (!chosen[uq] && min_dist[uq] > farthest) {
          farthest = min_dist[uq];
          pick = q;
        }
      }
      if (std::isinf(farthest)) {
        const std::span<const double> ref =
            order.empty() ? std::span<const double>(global_center) : std::span<const double>(centers.data() + b * d, d);
        double nearest = std::numeric_limits<double>::infinity();
        for (int q : members[b]) {
          const auto uq = static_cast<std::size_t>(q);
          if (chosen[uq]) continue;
          const double dist = squared_distance(locs.point(uq), ref);
          if (dist < nearest) {
            nearest = dist;
            pick = q;
          }
        }
      }
      const auto up = static_cast<std::size_t>(pick);
      chosen[up] = 1;
      order.push_back(pick);
      --remaining[b];
      update_neighbours(up);
    }
    std::erase_if(cycle, [&](int slot) { return remaining[static_cast<std::size_t>(slot)] == 0; });
  }
  return Permutation(std::move(order));
}

Permutation make_ordering(OrderingScheme scheme, const Locations& locs, std::uint64_t seed) {
  switch (scheme) {
    case OrderingScheme::coordinate:
      return order_sorted_coordinate(locs, SortKey{0});
    case OrderingScheme::sum:
      return order_sorted_coordinate(locs, SortKey{SortKey::sum});
    case OrderingScheme::middle_out:
      return order_middle_out(locs);
    case OrderingScheme::random:
      return order_random(locs.size(), seed);
    case OrderingScheme::mmd:
      return order_mmd_exact(locs);
    case OrderingScheme::ammd:
      return order_ammd(locs);
  }
  throw InvalidArgument("unknown ordering scheme");
}

}  // namespace vecchia
