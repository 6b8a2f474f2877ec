#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchorder/config.hpp"
#include "patchorder/filtering.hpp"
#include "patchorder/image.hpp"

namespace patchorder {

enum class Scenario : std::uint8_t { original, prop20k, prop10k };

std::string to_string(Scenario scenario);
Scenario parse_scenario(const std::string& text);
/// original -> no cap, prop20k -> 20000, prop10k -> 10000.
SubsetCap scenario_cap(Scenario scenario);

struct ExperimentRecord {
  std::string image;
  double sigma = 0.0;
  Scenario scenario = Scenario::original;
  SubsetCap cap;
  std::size_t W = 0;
  std::size_t X = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double input_psnr = 0.0;
  double output_psnr = 0.0;
  double tsp_solve_wall = 0.0;  // seconds
  double tsp_solve_sum = 0.0;
  double filter_seconds = 0.0;
  double total_seconds = 0.0;
  std::size_t tour_count = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  bool timing_comparable = true;

  [[nodiscard]] double tsp_fraction() const {
    return total_seconds > 0.0 ? tsp_solve_wall / total_seconds : 0.0;
  }
  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

class MissingInputsError : public std::runtime_error {
 public:
  explicit MissingInputsError(std::vector<std::string> missing);
  [[nodiscard]] const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

/// Parses key=value lines ('#' starts a comment) into a DenoiseConfig.
/// Recognized keys: sigma, patch_side, tau, K, B, window, cap, filter_mode,
/// seed, threads. Unknown keys are returned in `unknown` when non-null,
/// otherwise rejected. The result is validated.
DenoiseConfig parse_denoise_config(const std::string& text,
                                   std::map<std::string, std::string>* unknown = nullptr);

struct MatrixConfig {
  DenoiseConfig base;  // sigma and cap are set per record
  std::vector<std::filesystem::path> images;
  std::vector<std::filesystem::path> train_images;
  std::optional<std::filesystem::path> filters_dir;
  std::vector<double> sigmas{25.0, 50.0};
  std::vector<Scenario> scenarios{Scenario::original, Scenario::prop20k, Scenario::prop10k};
  std::size_t repetitions = 3;
  bool quick = false;
  std::size_t quick_side = 256;
  bool parallel = false;  // records run concurrently; timings marked non-comparable
  double lambda = kDefaultRidgeLambda;
};

/// Matrix config file: the DenoiseConfig keys plus images, train_images
/// (comma-separated files or a directory), filters_dir, sigma (one value or
/// a comma list), scenarios, repetitions, quick, parallel, lambda. Relative
/// paths resolve against `base_dir`.
MatrixConfig parse_matrix_config(const std::string& text, const std::filesystem::path& base_dir);
MatrixConfig load_matrix_config(const std::filesystem::path& path);

/// Name of the filter bank file for (sigma, scenario) inside a filters dir.
std::string filter_bank_filename(double sigma, Scenario scenario);

/// Noise-injects `clean` with a seed derived from `seed`, denoises it under
/// `scenario` and records PSNR and timings. The denoised image is written
/// to `denoised` when non-null.
ExperimentRecord single_run(const Image& clean, const std::string& name, double sigma,
                            Scenario scenario, std::uint64_t seed, const FilterBank& bank,
                            const DenoiseConfig& base, Image* denoised = nullptr);

/// Trains the bank used for (sigma, scenario) from clean training images.
FilterBank train_bank(const std::vector<Image>& training, double sigma, Scenario scenario,
                      const DenoiseConfig& base, double lambda = kDefaultRidgeLambda);

/// Runs images x sigmas x repetitions x scenarios. Progress goes to `log`.
std::vector<ExperimentRecord> run_matrix(const MatrixConfig& config, std::ostream* log = nullptr);

struct ScenarioSummary {
  Scenario scenario = Scenario::original;
  std::optional<double> sigma;      // unset: pooled over all sigmas
  double mean_delta_psnr = 0.0;     // scenario minus original, paired
  double mean_abs_delta_psnr = 0.0;
  double tsp_ratio = 0.0;           // mean over (image, sigma) of median-wall ratios
  double total_ratio = 0.0;
  std::size_t pairs = 0;
};

std::vector<ScenarioSummary> summarize(const std::vector<ExperimentRecord>& records);

inline constexpr int kCsvSchemaVersion = 1;

/// CSV: a "# patchorder-bench schema_version=N" line, the header row, one
/// row per record, then "# summary ..." comment lines.
std::string format_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> parse_csv(const std::string& text);
void write_csv(const std::vector<ExperimentRecord>& records, const std::filesystem::path& path);

/// Median of the values (mean of the middle two for even counts).
double median(std::vector<double> values);

std::string describe(const ExperimentRecord& record);

}  // namespace patchorder
