#include "patchorder/patches.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace patchorder {

PatchGrid::PatchGrid(const Image& img, std::size_t patch_side)
    : side_(patch_side), width_(img.width), height_(img.height) {
  if (patch_side < 2) throw std::invalid_argument("patch_side must be at least 2");
  if (img.width < patch_side || img.height < patch_side) {
    throw std::invalid_argument("image (" + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + ") is smaller than a " +
                                std::to_string(patch_side) + "x" +
                                std::to_string(patch_side) + " patch");
  }
  grid_rows_ = height_ - side_ + 1;
  grid_cols_ = width_ - side_ + 1;
  const std::size_t n = dim();
  locations_.reserve(grid_rows_ * grid_cols_);
  vectors_.resize(grid_rows_ * grid_cols_ * n);
  double* out = vectors_.data();
  for (std::size_t r = 0; r < grid_rows_; ++r) {
    for (std::size_t c = 0; c < grid_cols_; ++c) {
      locations_.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
      for (std::size_t dc = 0; dc < side_; ++dc) {
        for (std::size_t dr = 0; dr < side_; ++dr) *out++ = img.at(r + dr, c + dc);
      }
    }
  }
}

PatchGrid extract_patches(const Image& img, std::size_t patch_side) {
  return PatchGrid(img, patch_side);
}

double patch_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Classification classify_patches(const PatchGrid& grid, double sigma, double tau) {
  if (!(sigma > 0.0) || !(tau > 0.0)) {
    throw std::invalid_argument("classify_patches: sigma and tau must be positive");
  }
  Classification out;
  out.threshold = tau * sigma;
  out.labels.resize(grid.num_patches());
  for (std::size_t p = 0; p < grid.num_patches(); ++p) {
    out.labels[p] =
        patch_stddev(grid.vector(p)) <= out.threshold ? PatchClass::smooth : PatchClass::edge;
  }
  return out;
}

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void deal_class(std::vector<std::size_t> members, SubsetCap cap, std::mt19937_64& rng,
                std::vector<std::vector<std::size_t>>& subsets) {
  if (members.empty()) return;
  const std::size_t count = cap ? ceil_div(members.size(), *cap) : 1;
  if (count > 1) std::shuffle(members.begin(), members.end(), rng);
  const std::size_t base = members.size() / count;
  const std::size_t extra = members.size() % count;
  auto it = members.begin();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    std::vector<std::size_t> subset(it, it + static_cast<std::ptrdiff_t>(len));
    std::sort(subset.begin(), subset.end());
    subsets.push_back(std::move(subset));
    it += static_cast<std::ptrdiff_t>(len);
  }
}

}  // namespace

Partition partition_classes(const Classification& classification, SubsetCap cap,
                            std::uint64_t seed) {
  if (cap && *cap == 0) throw std::invalid_argument("partition cap must be at least 1");
  Partition part;
  part.labels = classification.labels;
  part.threshold_used = classification.threshold;
  part.cap = cap;

  std::vector<std::size_t> smooth;
  std::vector<std::size_t> edge;
  for (std::size_t p = 0; p < part.labels.size(); ++p) {
    (part.labels[p] == PatchClass::smooth ? smooth : edge).push_back(p);
  }
  part.smooth_class_empty = smooth.empty();
  part.edge_class_empty = edge.empty();

  std::mt19937_64 rng(seed);
  deal_class(std::move(smooth), cap, rng, part.subsets);
  part.W = part.subsets.size();
  deal_class(std::move(edge), cap, rng, part.subsets);
  part.X = part.subsets.size() - part.W;
  return part;
}

std::vector<double> gather_signal(const PatchGrid& grid, std::span<const std::size_t> subset,
                                  std::size_t j) {
  if (j >= grid.dim()) throw std::out_of_range("gather_signal: within-patch index out of range");
  std::vector<double> signal(subset.size());
  for (std::size_t t = 0; t < subset.size(); ++t) {
    if (subset[t] >= grid.num_patches()) {
      throw std::out_of_range("gather_signal: patch index out of range");
    }
    signal[t] = grid.vector(subset[t])[j];
  }
  return signal;
}

OverlapWeights compute_overlap_weights(std::size_t width, std::size_t height,
                                       std::size_t patch_side) {
  if (patch_side == 0 || width < patch_side || height < patch_side) {
    throw std::invalid_argument("compute_overlap_weights: invalid dimensions");
  }
  // Coverage separates into a row factor and a column factor.
  auto coverage = [patch_side](std::size_t extent) {
    const std::size_t last = extent - patch_side;  // last valid top-left
    std::vector<std::uint32_t> cov(extent);
    for (std::size_t x = 0; x < extent; ++x) {
      const std::size_t lo = x + 1 >= patch_side ? x + 1 - patch_side : 0;
      const std::size_t hi = std::min(x, last);
      cov[x] = static_cast<std::uint32_t>(hi - lo + 1);
    }
    return cov;
  };
  const auto rows = coverage(height);
  const auto cols = coverage(width);
  OverlapWeights w{width, height, std::vector<std::uint32_t>(width * height)};
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) w.counts[r * width + c] = rows[r] * cols[c];
  }
  return w;
}

}  // namespace patchorder
