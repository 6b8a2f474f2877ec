#pragma once

#include <cstddef>
#include <optional>

#include "patchorder/config.hpp"
#include "patchorder/filtering.hpp"
#include "patchorder/image.hpp"
#include "patchorder/ordering.hpp"
#include "patchorder/patches.hpp"

namespace patchorder {

/// Seconds spent per phase. tsp_solve_wall covers exactly the
/// build_ordering_set call; tsp_solve_sum adds up per-tour solve times over
/// all workers.
struct PhaseTimings {
  double classify = 0.0;  // patch extraction and classification
  double partition = 0.0;
  double tsp_solve_wall = 0.0;
  double tsp_solve_sum = 0.0;
  double filter = 0.0;
  double reconstruct = 0.0;  // gather, permute, scatter and normalize
  double total = 0.0;
};

struct DenoiseResult {
  Image output;
  std::optional<double> psnr_vs_clean;
  PhaseTimings timings;
  std::size_t W = 0;
  std::size_t X = 0;
  std::size_t tour_count = 0;
};

/// Everything the denoiser derives from the noisy image before filtering.
struct PreparedOrderings {
  PatchGrid grid;
  Partition partition;
  OrderingSet orderings;
};

/// Extracts, classifies and partitions the patches of `z` and builds the K
/// composite orderings.
PreparedOrderings prepare_orderings(const Image& z, const DenoiseConfig& config,
                                    PhaseTimings* timings = nullptr);

/// Applies the patch-ordering operator with fixed orderings:
///   (1/K) sum_k D^-1 sum_j R_j^T P_k^-1 H P_k R_j z
/// `grid` supplies patch geometry only; pixel values are read from `z`, so
/// for fixed orderings the result is linear in z.
Image reconstruct(const Image& z, const PatchGrid& grid, const Partition& partition,
                  const OrderingSet& orderings, const FilterBank& bank, std::size_t threads = 1,
                  PhaseTimings* timings = nullptr);

/// Full denoiser. `clean`, when given, is used only to report PSNR.
DenoiseResult denoise(const Image& z, const DenoiseConfig& config, const FilterBank& bank,
                      const Image* clean = nullptr);

/// denoise() with the cap removed: one smooth and one edge set, 2K tours.
DenoiseResult denoise_original(const Image& z, DenoiseConfig config, const FilterBank& bank,
                               const Image* clean = nullptr);

/// denoise() with a finite cap; throws std::invalid_argument if none is set.
DenoiseResult denoise_proposed(const Image& z, const DenoiseConfig& config,
                               const FilterBank& bank, const Image* clean = nullptr);

}  // namespace patchorder
