#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "patchorder/image.hpp"

namespace patchorder {

struct PatchLocation {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const PatchLocation&, const PatchLocation&) = default;
};

/// Every overlapping patch_side x patch_side patch of an image, as points in
/// R^n (n = patch_side^2). Patches are enumerated in raster order of their
/// top-left corner; entries within a patch are column-stacked, so entry j
/// sits at (row + j % side, col + j / side).
class PatchGrid {
 public:
  PatchGrid(const Image& img, std::size_t patch_side);

  [[nodiscard]] std::size_t patch_side() const noexcept { return side_; }
  [[nodiscard]] std::size_t dim() const noexcept { return side_ * side_; }
  [[nodiscard]] std::size_t num_patches() const noexcept { return locations_.size(); }
  [[nodiscard]] std::size_t grid_rows() const noexcept { return grid_rows_; }
  [[nodiscard]] std::size_t grid_cols() const noexcept { return grid_cols_; }
  [[nodiscard]] std::size_t image_width() const noexcept { return width_; }
  [[nodiscard]] std::size_t image_height() const noexcept { return height_; }

  [[nodiscard]] std::span<const double> vector(std::size_t patch) const {
    return {vectors_.data() + patch * dim(), dim()};
  }
  [[nodiscard]] std::span<const double> vectors() const noexcept { return vectors_; }
  [[nodiscard]] PatchLocation location(std::size_t patch) const { return locations_[patch]; }
  [[nodiscard]] std::span<const PatchLocation> locations() const noexcept { return locations_; }

  /// Row-major image index of the top-left pixel of `patch`.
  [[nodiscard]] std::size_t base_index(std::size_t patch) const {
    const auto loc = locations_[patch];
    return static_cast<std::size_t>(loc.row) * width_ + loc.col;
  }
  /// Offset of within-patch entry j relative to the patch's base index.
  [[nodiscard]] std::size_t entry_offset(std::size_t j) const {
    return (j % side_) * width_ + j / side_;
  }

 private:
  std::size_t side_;
  std::size_t width_;
  std::size_t height_;
  std::size_t grid_rows_;
  std::size_t grid_cols_;
  std::vector<double> vectors_;
  std::vector<PatchLocation> locations_;
};

/// Throws std::invalid_argument when patch_side < 2 or the image is smaller
/// than one patch.
PatchGrid extract_patches(const Image& img, std::size_t patch_side);

enum class PatchClass : std::uint8_t { smooth, edge };

struct Classification {
  std::vector<PatchClass> labels;
  double threshold = 0.0;  // std threshold actually applied (tau * sigma)
};

/// Smooth iff the patch's sample standard deviation is <= tau * sigma.
Classification classify_patches(const PatchGrid& grid, double sigma, double tau);

/// Unbiased (n - 1) standard deviation of a patch vector.
double patch_stddev(std::span<const double> values);

/// Maximum subset size. std::nullopt means "no cap": one subset per class.
using SubsetCap = std::optional<std::size_t>;

/// W smooth-class subsets followed by X edge-class subsets. Each subset is a
/// list of patch indices in ascending (raster) order.
struct Partition {
  std::vector<PatchClass> labels;
  double threshold_used = 0.0;
  std::vector<std::vector<std::size_t>> subsets;
  std::size_t W = 0;
  std::size_t X = 0;
  SubsetCap cap;
  bool smooth_class_empty = false;
  bool edge_class_empty = false;

  [[nodiscard]] std::size_t num_subsets() const noexcept { return subsets.size(); }
  [[nodiscard]] PatchClass subset_class(std::size_t i) const noexcept {
    return i < W ? PatchClass::smooth : PatchClass::edge;
  }
};

/// W = ceil(|S_s| / cap), X = ceil(|S_e| / cap). Members of a class are
/// shuffled with `seed` and dealt into balanced subsets (sizes differ by at
/// most one). An empty class yields zero subsets and sets its flag.
Partition partition_classes(const Classification& classification, SubsetCap cap,
                            std::uint64_t seed);

/// signal[t] = entry j of patch subset[t].
std::vector<double> gather_signal(const PatchGrid& grid, std::span<const std::size_t> subset,
                                  std::size_t j);

/// Diagonal of D: how many patches cover each pixel.
struct OverlapWeights {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> counts;

  [[nodiscard]] std::uint32_t at(std::size_t row, std::size_t col) const {
    return counts[row * width + col];
  }
};

OverlapWeights compute_overlap_weights(std::size_t width, std::size_t height,
                                       std::size_t patch_side);

}  // namespace patchorder
