#include <stdexcept>
#include <string>

#include "ordered_signals.hpp"
#include "parallel.hpp"
#include "patchorder/filtering.hpp"
#include "patchorder/pipeline.hpp"

namespace patchorder {

FilterBank learn_filters(std::span<const TrainingSample> samples, const DenoiseConfig& config,
                         double lambda) {
  if (samples.empty()) throw std::invalid_argument("learn_filters: no training images");
  if (lambda < 0.0) throw std::invalid_argument("learn_filters: lambda must be non-negative");
  config.validate();

  std::vector<RidgeNormalEquations> slots;
  if (config.filter_mode == FilterMode::per_class) slots.resize(2);

  for (const TrainingSample& sample : samples) {
    const Image noisy = add_gaussian_noise(sample.clean, sample.sigma, sample.seed);
    DenoiseConfig cfg = config;
    cfg.sigma = sample.sigma;
    const PreparedOrderings prep = prepare_orderings(noisy, cfg);
    const Partition& partition = prep.partition;

    if (config.filter_mode == FilterMode::per_subset) {
      if (slots.empty()) slots.resize(partition.num_subsets());
      if (slots.size() != partition.num_subsets()) {
        throw FilterArityError("learn_filters: per-subset training images disagree on W+X (" +
                               std::to_string(slots.size()) + " vs " +
                               std::to_string(partition.num_subsets()) + ")");
      }
    }
    auto slot_of = [&](std::size_t i) -> std::size_t {
      if (config.filter_mode == FilterMode::per_subset) return i;
      return partition.subset_class(i) == PatchClass::smooth ? 0 : 1;
    };

    const std::size_t K = prep.orderings.K;
    const std::size_t n = prep.grid.dim();
    std::vector<std::vector<RidgeNormalEquations>> per_k(K);
    detail::parallel_for(K, config.threads, [&](std::size_t k) {
      per_k[k].resize(slots.size());
      const auto composite = detail::make_composite(prep.grid, partition, prep.orderings.per_k[k]);
      const std::size_t total = composite.base.size();
      std::vector<double> ordered_noisy(total);
      std::vector<double> ordered_clean(total);
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t offset = prep.grid.entry_offset(j);
        for (std::size_t t = 0; t < total; ++t) {
          ordered_noisy[t] = noisy.data[composite.base[t] + offset];
          ordered_clean[t] = sample.clean.data[composite.base[t] + offset];
        }
        for (std::size_t i = 0; i < partition.num_subsets(); ++i) {
          const std::size_t lo = composite.block_start[i];
          const std::size_t len = composite.block_start[i + 1] - lo;
          per_k[k][slot_of(i)].add(std::span<const double>(ordered_noisy).subspan(lo, len),
                                   std::span<const double>(ordered_clean).subspan(lo, len));
        }
      }
    });
    for (const auto& partial : per_k) {
      for (std::size_t s = 0; s < slots.size(); ++s) slots[s].merge(partial[s]);
    }
  }

  FilterBank bank;
  bank.mode = config.filter_mode;
  bank.trained_sigma = config.sigma;
  bank.taps.reserve(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (slots[s].samples() == 0) {
      throw std::runtime_error("learn_filters: no training signal reached filter slot " +
                               std::to_string(s));
    }
    bank.taps.push_back(slots[s].solve(lambda));
  }
  return bank;
}

}  // namespace patchorder
