#pragma once

#include <cstddef>
#include <vector>

#include "patchorder/ordering.hpp"
#include "patchorder/patches.hpp"

namespace patchorder::detail {

// One composite permutation flattened to image coordinates: position t of the
// concatenated ordered signal holds entry j of the patch whose top-left pixel
// is base[t], i.e. image pixel base[t] + grid.entry_offset(j).
struct CompositeOrder {
  std::vector<std::size_t> base;
  std::vector<std::size_t> block_start;  // num_subsets + 1 boundaries into base
};

inline CompositeOrder make_composite(const PatchGrid& grid, const Partition& partition,
                                     const std::vector<Tour>& tours) {
  CompositeOrder out;
  out.base.reserve(grid.num_patches());
  out.block_start.reserve(partition.num_subsets() + 1);
  for (std::size_t i = 0; i < partition.num_subsets(); ++i) {
    out.block_start.push_back(out.base.size());
    const auto& members = partition.subsets[i];
    for (std::uint32_t local : tours[i].order) out.base.push_back(grid.base_index(members[local]));
  }
  out.block_start.push_back(out.base.size());
  return out;
}

}  // namespace patchorder::detail
