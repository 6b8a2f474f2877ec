#include "patchorder/ordering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "parallel.hpp"
#include "patchorder/random.hpp"

namespace patchorder {

namespace {

using Clock = std::chrono::steady_clock;

// Squared distance accumulated in four lanes (coordinate index mod 4) and
// combined as (s0 + s1) + (s2 + s3), a fixed order, so results are
// reproducible across builds.
inline double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= dim; k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  if (k < dim) { const double d = a[k] - b[k]; s0 += d * d; ++k; }
  if (k < dim) { const double d = a[k] - b[k]; s1 += d * d; ++k; }
  if (k < dim) { const double d = a[k] - b[k]; s2 += d * d; }
  return (s0 + s1) + (s2 + s3);
}

struct Candidate {
  double dist2;
  std::uint32_t index;
};

inline bool closer(const Candidate& a, const Candidate& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

// Fixed-capacity list of the `capacity` closest candidates seen so far.
class NearestList {
 public:
  explicit NearestList(std::size_t capacity) : capacity_(capacity) { items_.reserve(capacity); }

  void clear() { items_.clear(); }
  [[nodiscard]] bool empty() const { return items_.empty(); }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] const Candidate& operator[](std::size_t i) const { return items_[i]; }

  // Distances strictly above this can never enter the list.
  [[nodiscard]] double bound() const {
    return items_.size() < capacity_ ? std::numeric_limits<double>::infinity()
                                     : items_.back().dist2;
  }

  void offer(Candidate c) {
    if (items_.size() == capacity_) {
      if (!closer(c, items_.back())) return;
      items_.pop_back();
    }
    auto it = std::upper_bound(items_.begin(), items_.end(), c, closer);
    items_.insert(it, c);
  }

 private:
  std::size_t capacity_;
  std::vector<Candidate> items_;
};

// Unvisited indices with O(1) removal and random access.
class UnvisitedPool {
 public:
  explicit UnvisitedPool(std::size_t m) : items_(m), pos_(m) {
    for (std::size_t i = 0; i < m; ++i) {
      items_[i] = static_cast<std::uint32_t>(i);
      pos_[i] = static_cast<std::uint32_t>(i);
    }
  }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] bool empty() const { return items_.empty(); }
  [[nodiscard]] std::uint32_t operator[](std::size_t i) const { return items_[i]; }

  void remove(std::uint32_t idx) {
    const std::uint32_t p = pos_[idx];
    const std::uint32_t last = items_.back();
    items_[p] = last;
    pos_[last] = p;
    items_.pop_back();
  }
  void swap_slots(std::size_t a, std::size_t b) {
    std::swap(items_[a], items_[b]);
    pos_[items_[a]] = static_cast<std::uint32_t>(a);
    pos_[items_[b]] = static_cast<std::uint32_t>(b);
  }

 private:
  std::vector<std::uint32_t> items_;
  std::vector<std::uint32_t> pos_;
};

// Unvisited points bucketed by square tiles (normally 8x8) of the
// locations' bounding box. Each tile owns a contiguous slice of `entries_`
// with its live members at the front, so a box query touches only live
// points of the overlapping tiles and its cost follows the local density.
class TileIndex {
 public:
  struct Entry {
    std::uint32_t row;  // relative to the bounding box
    std::uint32_t col;
    std::uint32_t index;
  };

  TileIndex(std::span<const PatchLocation> locations, std::uint32_t rmin, std::uint32_t cmin,
            std::size_t rows, std::size_t cols)
  {
    const std::size_t m = locations.size();
    // Sparse point sets spread over a huge box get coarser tiles so the
    // tile table stays proportional to the point count.
    while (((rows - 1) >> shift_) * ((cols - 1) >> shift_) > 4 * m + 4096) ++shift_;
    tile_rows_ = ((rows - 1) >> shift_) + 1;
    tile_cols_ = ((cols - 1) >> shift_) + 1;
    const std::size_t tiles = tile_rows_ * tile_cols_;
    begin_.assign(tiles + 1, 0);
    std::vector<std::uint32_t> tile_of(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = locations[i].row - rmin;
      const std::size_t c = locations[i].col - cmin;
      tile_of[i] = static_cast<std::uint32_t>((r >> shift_) * tile_cols_ + (c >> shift_));
      ++begin_[tile_of[i] + 1];
    }
    for (std::size_t t = 0; t < tiles; ++t) begin_[t + 1] += begin_[t];
    end_.assign(begin_.begin(), begin_.end() - 1);
    entries_.resize(m);
    slot_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint32_t at = end_[tile_of[i]]++;
      entries_[at] = {locations[i].row - rmin, locations[i].col - cmin,
                      static_cast<std::uint32_t>(i)};
      slot_[i] = at;
    }
    // Duplicate locations share a tile. With 8x8 tiles a 64-bit mask per
    // tile catches them; coarser tiles sort their members instead.
    for (std::size_t t = 0; t < tiles; ++t) {
      if (shift_ == 3) {
        std::uint64_t seen = 0;
        for (std::uint32_t e = begin_[t]; e < end_[t]; ++e) {
          const std::uint64_t bit = std::uint64_t{1}
                                    << (((entries_[e].row & 7u) << 3) | (entries_[e].col & 7u));
          if (seen & bit) throw std::invalid_argument("build_tour: duplicate point location");
          seen |= bit;
        }
      } else {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> cells;
        for (std::uint32_t e = begin_[t]; e < end_[t]; ++e) {
          cells.emplace_back(entries_[e].row, entries_[e].col);
        }
        std::sort(cells.begin(), cells.end());
        if (std::adjacent_find(cells.begin(), cells.end()) != cells.end()) {
          throw std::invalid_argument("build_tour: duplicate point location");
        }
      }
    }
  }

  void remove(std::uint32_t idx) {
    const Entry& e = entries_[slot_[idx]];
    const std::size_t tile = (e.row >> shift_) * tile_cols_ + (e.col >> shift_);
    const std::uint32_t last = --end_[tile];
    const std::uint32_t at = slot_[idx];
    std::swap(entries_[at], entries_[last]);
    slot_[entries_[at].index] = at;
    slot_[idx] = last;
  }

  // Appends every live point whose location lies in [rlo, rhi] x [clo, chi].
  void query(std::size_t rlo, std::size_t rhi, std::size_t clo, std::size_t chi,
             std::vector<std::uint32_t>& out) const {
    out.clear();
    const std::size_t trlo = rlo >> shift_, trhi = rhi >> shift_;
    const std::size_t tclo = clo >> shift_, tchi = chi >> shift_;
    for (std::size_t tr = trlo; tr <= trhi; ++tr) {
      for (std::size_t tc = tclo; tc <= tchi; ++tc) {
        const std::size_t tile = tr * tile_cols_ + tc;
        const std::uint32_t b = begin_[tile], e = end_[tile];
        if (b == e) continue;
        const std::size_t base = out.size();
        out.resize(base + (e - b));
        std::size_t count = base;
        for (std::uint32_t k = b; k < e; ++k) {
          const Entry& en = entries_[k];
          out[count] = en.index;
          count += (en.row >= rlo) & (en.row <= rhi) & (en.col >= clo) & (en.col <= chi);
        }
        out.resize(count);
      }
    }
  }

 private:
  std::size_t shift_ = 3;
  std::size_t tile_rows_ = 0;
  std::size_t tile_cols_ = 0;
  std::vector<std::uint32_t> begin_;  // slice start per tile (plus sentinel)
  std::vector<std::uint32_t> end_;    // one past the last live entry per tile
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> slot_;   // position of each point in entries_
};

}  // namespace

Tour build_tour(std::span<const double> points, std::size_t dim,
                std::span<const PatchLocation> locations, const TourParams& params,
                std::uint64_t seed, std::optional<std::size_t> start) {
  const std::size_t m = locations.size();
  if (m == 0) throw std::invalid_argument("build_tour: empty point list");
  if (dim == 0 || points.size() != m * dim) {
    throw std::invalid_argument("build_tour: point buffer does not match locations");
  }
  if (params.branch == 0 || params.window == 0 || params.fallback_sample == 0) {
    throw std::invalid_argument("build_tour: branch, window and fallback sample must be >= 1");
  }
  if (m > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("build_tour: too many points");
  }
  if (start && *start >= m) throw std::out_of_range("build_tour: start index out of range");

  std::uint32_t rmin = locations[0].row, rmax = rmin;
  std::uint32_t cmin = locations[0].col, cmax = cmin;
  for (const auto& loc : locations) {
    rmin = std::min(rmin, loc.row);
    rmax = std::max(rmax, loc.row);
    cmin = std::min(cmin, loc.col);
    cmax = std::max(cmax, loc.col);
  }
  const std::size_t rows = std::size_t{rmax} - rmin + 1;
  const std::size_t cols = std::size_t{cmax} - cmin + 1;
  TileIndex tiles(locations, rmin, cmin, rows, cols);

  std::mt19937_64 rng(seed);
  auto uniform_below = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  UnvisitedPool pool(m);
  NearestList nearest(params.branch);
  std::vector<std::uint32_t> candidates;
  Tour tour;
  tour.order.reserve(m);

  auto visit = [&](std::uint32_t idx) {
    pool.remove(idx);
    tiles.remove(idx);
    tour.order.push_back(idx);
  };

  std::uint32_t current = static_cast<std::uint32_t>(start ? *start : uniform_below(m));
  visit(current);

  const std::size_t w = params.window;
  while (!pool.empty()) {
    const double* here = points.data() + std::size_t{current} * dim;
    const PatchLocation loc = locations[current];
    const std::size_t r0 = loc.row - rmin;
    const std::size_t c0 = loc.col - cmin;
    const std::size_t rlo = r0 > w ? r0 - w : 0;
    const std::size_t rhi = w >= rows ? rows - 1 : std::min(rows - 1, r0 + w);
    const std::size_t clo = c0 > w ? c0 - w : 0;
    const std::size_t chi = w >= cols ? cols - 1 : std::min(cols - 1, c0 + w);

    // Collect the live candidates first, then measure them in one tight
    // loop; scan order does not affect the result.
    tiles.query(rlo, rhi, clo, chi, candidates);

    nearest.clear();
    for (std::uint32_t idx : candidates) {
      const double d2 = squared_distance(here, points.data() + std::size_t{idx} * dim, dim);
      if (d2 <= nearest.bound()) nearest.offer({d2, idx});
    }

    Candidate next{};
    if (!nearest.empty()) {
      next = nearest.size() == 1 ? nearest[0] : nearest[uniform_below(nearest.size())];
    } else {
      // Window exhausted: nearest of a random sample of unvisited points.
      const std::size_t sample = std::min(params.fallback_sample, pool.size());
      for (std::size_t s = 0; s < sample; ++s) {
        pool.swap_slots(s, s + uniform_below(pool.size() - s));
      }
      NearestList best(1);
      for (std::size_t s = 0; s < sample; ++s) {
        const std::uint32_t idx = pool[s];
        const double d2 = squared_distance(here, points.data() + std::size_t{idx} * dim, dim);
        if (d2 <= best.bound()) best.offer({d2, idx});
      }
      next = best[0];
    }
    tour.length_sum += std::sqrt(next.dist2);
    current = next.index;
    visit(current);
  }
  return tour;
}

bool is_bijection(const Tour& tour) {
  std::vector<bool> seen(tour.order.size(), false);
  for (std::uint32_t idx : tour.order) {
    if (idx >= seen.size() || seen[idx]) return false;
    seen[idx] = true;
  }
  return true;
}

OrderingSet build_ordering_set(const PatchGrid& grid, const Partition& partition, std::size_t K,
                               std::uint64_t seed, const TourParams& params,
                               std::size_t threads, OrderingTimings* timings) {
  if (K == 0) throw std::invalid_argument("build_ordering_set: K must be at least 1");
  const auto wall_start = Clock::now();
  const std::size_t subsets = partition.num_subsets();
  const std::size_t dim = grid.dim();

  // Subset coordinates are gathered once and shared by all K orderings.
  std::vector<std::vector<double>> coords(subsets);
  std::vector<std::vector<PatchLocation>> locs(subsets);
  for (std::size_t i = 0; i < subsets; ++i) {
    const auto& members = partition.subsets[i];
    coords[i].resize(members.size() * dim);
    locs[i].resize(members.size());
    for (std::size_t t = 0; t < members.size(); ++t) {
      const auto v = grid.vector(members[t]);
      std::copy(v.begin(), v.end(), coords[i].begin() + static_cast<std::ptrdiff_t>(t * dim));
      locs[i][t] = grid.location(members[t]);
    }
  }

  OrderingSet set;
  set.K = K;
  set.per_k.assign(K, std::vector<Tour>(subsets));
  std::vector<double> task_seconds(K * subsets, 0.0);
  detail::parallel_for(K * subsets, threads, [&](std::size_t task) {
    const std::size_t k = task / subsets;
    const std::size_t i = task % subsets;
    const auto t0 = Clock::now();
    set.per_k[k][i] = build_tour(coords[i], dim, locs[i], params, derive_seed(seed, {k, i}));
    task_seconds[task] = std::chrono::duration<double>(Clock::now() - t0).count();
  });

  if (timings) {
    timings->wall_seconds = std::chrono::duration<double>(Clock::now() - wall_start).count();
    timings->task_seconds_sum = 0.0;
    for (double s : task_seconds) timings->task_seconds_sum += s;
  }
  return set;
}

std::vector<double> apply_permutation(std::span<const double> signal, const Tour& tour) {
  if (signal.size() != tour.size()) {
    throw std::invalid_argument("apply_permutation: signal length does not match tour");
  }
  std::vector<double> out(signal.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = signal[tour.order[t]];
  return out;
}

std::vector<double> invert_permutation(std::span<const double> signal, const Tour& tour) {
  if (signal.size() != tour.size()) {
    throw std::invalid_argument("invert_permutation: signal length does not match tour");
  }
  std::vector<double> out(signal.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[tour.order[t]] = signal[t];
  return out;
}

}  // namespace patchorder
