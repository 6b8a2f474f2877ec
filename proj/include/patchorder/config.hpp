#pragma once

#include <cstddef>
#include <cstdint>

#include "patchorder/ordering.hpp"
#include "patchorder/patches.hpp"

namespace patchorder {

enum class FilterMode : std::uint8_t {
  per_class,   // one filter for all smooth subsets, one for all edge subsets
  per_subset,  // one filter per subset, W + X in total
};

struct DenoiseConfig {
  double sigma = 25.0;
  std::size_t patch_side = 0;  // 0 selects 5 for sigma <= 30, 8 above
  double tau = 1.15;
  std::size_t K = 10;
  SubsetCap cap;  // unset: original two-set formulation
  std::size_t branch = 2;
  std::size_t window = 31;
  FilterMode filter_mode = FilterMode::per_class;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  [[nodiscard]] std::size_t effective_patch_side() const noexcept {
    if (patch_side != 0) return patch_side;
    return sigma <= 30.0 ? 5 : 8;
  }
  [[nodiscard]] TourParams tour_params() const noexcept {
    TourParams p;
    p.branch = branch;
    p.window = window;
    return p;
  }
  [[nodiscard]] bool original_mode() const noexcept { return !cap.has_value(); }

  /// Throws std::invalid_argument describing the first invalid field.
  void validate() const;
};

// Stream ids for the seeds the pipeline derives from DenoiseConfig::seed.
inline constexpr std::uint64_t kPartitionStream = 0x70617274;  // "part"
inline constexpr std::uint64_t kOrderingStream = 0x6f726472;   // "ordr"

}  // namespace patchorder
