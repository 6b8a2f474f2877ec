#include "patchorder/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>

#include "ordered_signals.hpp"
#include "parallel.hpp"
#include "patchorder/random.hpp"

namespace patchorder {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void DenoiseConfig::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("config: sigma must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be positive");
  if (K == 0) throw std::invalid_argument("config: K must be at least 1");
  if (cap && *cap == 0) throw std::invalid_argument("config: cap must be at least 1");
  if (branch == 0) throw std::invalid_argument("config: branch (B) must be at least 1");
  if (window == 0) throw std::invalid_argument("config: window must be at least 1");
  if (patch_side == 1) throw std::invalid_argument("config: patch_side must be at least 2");
  if (threads == 0) throw std::invalid_argument("config: threads must be at least 1");
}

PreparedOrderings prepare_orderings(const Image& z, const DenoiseConfig& config,
                                    PhaseTimings* timings) {
  config.validate();
  auto t0 = Clock::now();
  PatchGrid grid = extract_patches(z, config.effective_patch_side());
  const Classification classes = classify_patches(grid, config.sigma, config.tau);
  const double classify_s = seconds_since(t0);

  t0 = Clock::now();
  Partition partition =
      partition_classes(classes, config.cap, derive_seed(config.seed, {kPartitionStream}));
  const double partition_s = seconds_since(t0);

  OrderingTimings ot;
  OrderingSet orderings =
      build_ordering_set(grid, partition, config.K, derive_seed(config.seed, {kOrderingStream}),
                         config.tour_params(), config.threads, &ot);
  if (timings) {
    timings->classify = classify_s;
    timings->partition = partition_s;
    timings->tsp_solve_wall = ot.wall_seconds;
    timings->tsp_solve_sum = ot.task_seconds_sum;
  }
  return {std::move(grid), std::move(partition), std::move(orderings)};
}

Image reconstruct(const Image& z, const PatchGrid& grid, const Partition& partition,
                  const OrderingSet& orderings, const FilterBank& bank, std::size_t threads,
                  PhaseTimings* timings) {
  const auto wall_start = Clock::now();
  if (z.width != grid.image_width() || z.height != grid.image_height()) {
    throw std::invalid_argument("reconstruct: image does not match patch grid geometry");
  }
  check_bank(bank, partition);
  if (orderings.K == 0 || orderings.per_k.size() != orderings.K) {
    throw std::invalid_argument("reconstruct: malformed ordering set");
  }
  for (const auto& tours : orderings.per_k) {
    if (tours.size() != partition.num_subsets()) {
      throw std::invalid_argument("reconstruct: ordering has " + std::to_string(tours.size()) +
                                  " tours for " + std::to_string(partition.num_subsets()) +
                                  " subsets");
    }
    for (std::size_t i = 0; i < tours.size(); ++i) {
      if (tours[i].size() != partition.subsets[i].size()) {
        throw std::invalid_argument("reconstruct: tour size does not match subset " +
                                    std::to_string(i));
      }
    }
  }

  const std::size_t K = orderings.K;
  const std::size_t n = grid.dim();
  std::vector<std::vector<double>> partial(K);
  std::vector<double> filter_seconds(K, 0.0);
  std::vector<double> task_seconds(K, 0.0);

  detail::parallel_for(K, threads, [&](std::size_t k) {
    const auto task_start = Clock::now();
    const auto composite = detail::make_composite(grid, partition, orderings.per_k[k]);
    const std::size_t total = composite.base.size();
    std::vector<double> ordered(total);
    std::vector<double> filtered(total);
    std::vector<double>& acc = partial[k];
    acc.assign(z.size(), 0.0);
    double filter_s = 0.0;

    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t offset = grid.entry_offset(j);
      for (std::size_t t = 0; t < total; ++t) ordered[t] = z.data[composite.base[t] + offset];

      const auto f0 = Clock::now();
      for (std::size_t i = 0; i < partition.num_subsets(); ++i) {
        const std::size_t lo = composite.block_start[i];
        const std::size_t len = composite.block_start[i + 1] - lo;
        convolve_same(std::span<const double>(ordered).subspan(lo, len),
                      bank.taps_for(i, partition), std::span<double>(filtered).subspan(lo, len));
      }
      filter_s += seconds_since(f0);

      for (std::size_t t = 0; t < total; ++t) acc[composite.base[t] + offset] += filtered[t];
    }
    filter_seconds[k] = filter_s;
    task_seconds[k] = seconds_since(task_start);
  });

  const auto weights = compute_overlap_weights(z.width, z.height, grid.patch_side());
  Image out(z.width, z.height);
  for (const auto& acc : partial) {
    for (std::size_t p = 0; p < out.data.size(); ++p) out.data[p] += acc[p];
  }
  const auto k_scale = static_cast<double>(K);
  for (std::size_t p = 0; p < out.data.size(); ++p) {
    out.data[p] /= static_cast<double>(weights.counts[p]) * k_scale;
  }

  if (timings) {
    const double wall = seconds_since(wall_start);
    double filter_sum = 0.0;
    double task_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      filter_sum += filter_seconds[k];
      task_sum += task_seconds[k];
    }
    // Report the filtering share of the wall time so phases stay additive
    // when tasks overlap on several workers.
    const double filter_wall = task_sum > 0.0 ? wall * (filter_sum / task_sum) : 0.0;
    timings->filter = filter_wall;
    timings->reconstruct = std::max(0.0, wall - filter_wall);
  }
  return out;
}

DenoiseResult denoise(const Image& z, const DenoiseConfig& config, const FilterBank& bank,
                      const Image* clean) {
  const auto start = Clock::now();
  if (bank.mode != config.filter_mode) {
    throw FilterArityError("filter bank mode " + to_string(bank.mode) +
                           " does not match configured mode " + to_string(config.filter_mode));
  }
  DenoiseResult result;
  PreparedOrderings prep = prepare_orderings(z, config, &result.timings);
  result.output = reconstruct(z, prep.grid, prep.partition, prep.orderings, bank, config.threads,
                              &result.timings);
  result.W = prep.partition.W;
  result.X = prep.partition.X;
  result.tour_count = prep.orderings.tour_count();
  result.timings.total = seconds_since(start);
  if (clean) result.psnr_vs_clean = psnr(result.output, *clean);
  return result;
}

DenoiseResult denoise_original(const Image& z, DenoiseConfig config, const FilterBank& bank,
                               const Image* clean) {
  config.cap.reset();
  return denoise(z, config, bank, clean);
}

DenoiseResult denoise_proposed(const Image& z, const DenoiseConfig& config,
                               const FilterBank& bank, const Image* clean) {
  if (!config.cap) throw std::invalid_argument("denoise_proposed requires a finite cap");
  return denoise(z, config, bank, clean);
}

}  // namespace patchorder
