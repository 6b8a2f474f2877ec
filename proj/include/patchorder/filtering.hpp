#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchorder/config.hpp"
#include "patchorder/image.hpp"
#include "patchorder/patches.hpp"

namespace patchorder {

inline constexpr std::size_t kFilterTaps = 25;
inline constexpr std::size_t kFilterCenter = kFilterTaps / 2;
using Taps = std::array<double, kFilterTaps>;

/// Centered unit impulse: the identity filter.
Taps delta_taps();

struct FilterBank {
  FilterMode mode = FilterMode::per_class;
  std::vector<Taps> taps;  // per_class: {smooth, edge}; per_subset: one per subset
  double trained_sigma = 0.0;

  /// Filter applied to subset `i` of `partition`.
  [[nodiscard]] const Taps& taps_for(std::size_t i, const Partition& partition) const {
    if (mode == FilterMode::per_subset) return taps[i];
    return taps[partition.subset_class(i) == PatchClass::smooth ? 0 : 1];
  }

  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

class FilterArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bank whose filters are all centered impulses.
FilterBank delta_bank(FilterMode mode, std::size_t count = 2);

/// Throws FilterArityError if the bank cannot filter `partition`.
void check_bank(const FilterBank& bank, const Partition& partition);

/// Maps a possibly out-of-range index onto [0, length) by half-sample
/// symmetric reflection (x[-1] = x[0], x[L] = x[L-1]), repeating as needed.
std::size_t mirror_index(std::ptrdiff_t i, std::size_t length);

/// Same-length convolution, out[i] = sum_t taps[t] * x[i + 12 - t], with
/// symmetric extension at both ends. `out` must not alias `signal`.
void convolve_same(std::span<const double> signal, const Taps& taps, std::span<double> out);
std::vector<double> convolve_same(std::span<const double> signal, const Taps& taps);

/// Filters block i with the bank's filter for subset i. Blocks never mix.
std::vector<std::vector<double>> apply_filter_block(const std::vector<std::vector<double>>& blocks,
                                                    const FilterBank& bank,
                                                    const Partition& partition);

/// Normal equations of the ridge problem
///   min_h  sum ||convolve_same(x, h) - y||^2 + lambda ||h||^2
/// accumulated over any number of (x, y) signal pairs.
class RidgeNormalEquations {
 public:
  RidgeNormalEquations();

  void add(std::span<const double> noisy, std::span<const double> clean);
  void merge(const RidgeNormalEquations& other);

  /// Minimizer of the ridge objective. Throws SingularSystemError when the
  /// regularized matrix is (numerically) singular.
  [[nodiscard]] Taps solve(double lambda) const;
  [[nodiscard]] double objective(const Taps& taps, double lambda) const;

  [[nodiscard]] const std::array<double, kFilterTaps * kFilterTaps>& gram() const { return gram_; }
  [[nodiscard]] const Taps& rhs() const { return rhs_; }
  [[nodiscard]] std::size_t samples() const { return samples_; }

 private:
  std::array<double, kFilterTaps * kFilterTaps> gram_{};  // X^T X, row-major
  Taps rhs_{};                                            // X^T y
  double target_energy_ = 0.0;                            // y^T y
  std::size_t samples_ = 0;
  std::vector<double> scratch_;
};

struct TrainingSample {
  Image clean;
  double sigma = 25.0;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultRidgeLambda = 1e-4;

/// Learns a FilterBank by ridge regression of ordered clean signals on
/// ordered noisy signals. Each sample is noise-injected with its own seed,
/// then classified, partitioned and ordered exactly as the denoiser would;
/// normal equations are accumulated over all sub-images, orderings and the
/// blocks assigned to each filter slot.
///
/// In per-subset mode every training sample must produce the same W + X.
FilterBank learn_filters(std::span<const TrainingSample> samples, const DenoiseConfig& config,
                         double lambda = kDefaultRidgeLambda);

/// Plain-text format: "mode sigma count" then one line of 25 coefficients
/// per filter, printed with 17 significant digits.
std::string format_filter_bank(const FilterBank& bank);
FilterBank parse_filter_bank(const std::string& text);
void save_filter_bank(const FilterBank& bank, const std::filesystem::path& path);
FilterBank load_filter_bank(const std::filesystem::path& path);

std::string to_string(FilterMode mode);
FilterMode parse_filter_mode(const std::string& text);

}  // namespace patchorder
