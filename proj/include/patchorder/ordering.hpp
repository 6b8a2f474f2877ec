#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "patchorder/patches.hpp"

namespace patchorder {

/// Open path through a subset's points, as a permutation of local indices.
struct Tour {
  std::vector<std::uint32_t> order;
  double length_sum = 0.0;  // summed Euclidean edge length

  [[nodiscard]] std::size_t size() const noexcept { return order.size(); }
  friend bool operator==(const Tour&, const Tour&) = default;
};

inline constexpr std::size_t kUnlimitedWindow = std::numeric_limits<std::size_t>::max();

struct TourParams {
  std::size_t branch = 2;     // hop to one of the `branch` nearest candidates
  std::size_t window = 31;    // half-width of the spatial search box
  std::size_t fallback_sample = 100;
};

/// Randomized greedy nearest-neighbour tour.
///
/// `points` holds locations.size() row-major vectors of length `dim`.
/// Starting from `start` (or a seed-chosen point), each step looks at the
/// unvisited points whose location lies in the (2*window+1)^2 box around the
/// current location, keeps the `branch` nearest (ties broken by lower index)
/// and hops to one of them uniformly at random. When the box is empty the
/// walk jumps to the nearest of a random sample of at most
/// `fallback_sample` unvisited points. Locations must be unique.
Tour build_tour(std::span<const double> points, std::size_t dim,
                std::span<const PatchLocation> locations, const TourParams& params,
                std::uint64_t seed, std::optional<std::size_t> start = std::nullopt);

/// True when the tour visits every index 0..size-1 exactly once.
bool is_bijection(const Tour& tour);

/// K composite permutations; per_k[k][i] orders subset i of the partition
/// (smooth subsets first, then edge subsets).
struct OrderingSet {
  std::size_t K = 0;
  std::vector<std::vector<Tour>> per_k;

  [[nodiscard]] std::size_t tour_count() const noexcept {
    std::size_t n = 0;
    for (const auto& tours : per_k) n += tours.size();
    return n;
  }
  friend bool operator==(const OrderingSet&, const OrderingSet&) = default;
};

struct OrderingTimings {
  double wall_seconds = 0.0;
  double task_seconds_sum = 0.0;  // summed per-tour solve time across workers
};

/// Builds K * (W + X) tours. Each (k, subset) task draws from its own RNG
/// seeded by (seed, k, subset), so the result does not depend on `threads`.
OrderingSet build_ordering_set(const PatchGrid& grid, const Partition& partition, std::size_t K,
                               std::uint64_t seed, const TourParams& params,
                               std::size_t threads = 1, OrderingTimings* timings = nullptr);

/// out[t] = signal[tour.order[t]]
std::vector<double> apply_permutation(std::span<const double> signal, const Tour& tour);
/// Inverse of apply_permutation: out[tour.order[t]] = signal[t]
std::vector<double> invert_permutation(std::span<const double> signal, const Tour& tour);

}  // namespace patchorder
