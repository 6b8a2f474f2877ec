// denoise: command-line front end for the patch-ordering denoiser and its
// benchmark matrix.
//
//   denoise run    --image <pgm> --sigma <v> --scenario <name> --seed <u64> [--quick]
//   denoise matrix --config <file> --out <csv>
//   denoise train  --sigma <v> --images <dir> --out <filter file>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "patchorder/bench.hpp"
#include "patchorder/filtering.hpp"
#include "patchorder/image.hpp"

namespace fs = std::filesystem;
using namespace patchorder;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputsError({"config file: " + path.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Image> load_training(const std::string& spec, bool quick) {
  std::vector<fs::path> paths;
  if (fs::is_directory(spec)) {
    for (const auto& e : fs::directory_iterator(spec)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
  } else {
    std::stringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) paths.emplace_back(item);
  }
  std::vector<std::string> missing;
  for (const auto& p : paths) {
    if (!fs::is_regular_file(p)) missing.push_back("training image: " + p.string());
  }
  if (paths.empty()) missing.push_back("training images: none found in " + spec);
  if (!missing.empty()) throw MissingInputsError(missing);
  std::vector<Image> images;
  for (const auto& p : paths) {
    Image img = load_image(p);
    images.push_back(quick ? center_crop(img, 256) : std::move(img));
  }
  return images;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch-ordering image denoiser and benchmark harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Denoise one noise-injected image and report PSNR/timings");
  std::string run_image, run_scenario = "original", run_filters, run_train, run_config, run_output;
  double run_sigma = 25.0;
  std::uint64_t run_seed = 1;
  bool run_quick = false;
  run->add_option("--image", run_image, "Clean 8-bit PGM image")->required()->check(CLI::ExistingFile);
  run->add_option("--sigma", run_sigma, "Noise standard deviation")->required();
  run->add_option("--scenario", run_scenario, "original | prop20k | prop10k")
      ->check(CLI::IsMember({"original", "prop20k", "prop10k"}));
  run->add_option("--seed", run_seed, "Seed for noise, partition and orderings");
  run->add_flag("--quick", run_quick, "Use a 256x256 center crop");
  run->add_option("--filters", run_filters, "Filter bank file");
  run->add_option("--train-images", run_train, "Directory or comma list of training PGMs");
  run->add_option("--config", run_config, "key=value config for the remaining knobs");
  run->add_option("--save-output", run_output, "Write the denoised image as PGM");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Run the images x sigma x scenario experiment matrix");
  std::string matrix_config, matrix_out;
  matrix->add_option("--config", matrix_config, "Matrix config file")->required();
  matrix->add_option("--out", matrix_out, "Output CSV path")->required();

  // train
  auto* train = app.add_subcommand("train", "Learn a filter bank from clean training images");
  std::string train_images, train_out, train_config, train_scenario;
  double train_sigma = 25.0;
  bool train_quick = false;
  double train_lambda = kDefaultRidgeLambda;
  train->add_option("--sigma", train_sigma, "Noise standard deviation")->required();
  train->add_option("--images", train_images, "Directory or comma list of training PGMs")->required();
  train->add_option("--out", train_out, "Output filter bank file")->required();
  train->add_option("--scenario", train_scenario, "Train for this scenario's cap")
      ->check(CLI::IsMember({"original", "prop20k", "prop10k"}));
  train->add_option("--config", train_config, "key=value config for the remaining knobs");
  train->add_option("--lambda", train_lambda, "Ridge regularization");
  train->add_flag("--quick", train_quick, "Use 256x256 center crops");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const DenoiseConfig base =
          run_config.empty() ? DenoiseConfig{} : parse_denoise_config(read_file(run_config));
      const Scenario scenario = parse_scenario(run_scenario);
      FilterBank bank;
      if (!run_filters.empty()) {
        bank = load_filter_bank(run_filters);
      } else if (!run_train.empty()) {
        bank = train_bank(load_training(run_train, run_quick), run_sigma, scenario, base);
      } else {
        throw MissingInputsError({"filter bank: pass --filters <file> or --train-images <dir>"});
      }
      Image clean = load_image(run_image);
      if (run_quick) clean = center_crop(clean, 256);
      Image denoised;
      const auto record = single_run(clean, fs::path(run_image).stem().string(), run_sigma,
                                     scenario, run_seed, bank, base, &denoised);
      std::cout << describe(record) << "\n";
      if (!run_output.empty()) save_image(denoised, run_output);
    } else if (*matrix) {
      const MatrixConfig cfg = load_matrix_config(matrix_config);
      const auto records = run_matrix(cfg, &std::cerr);
      write_csv(records, matrix_out);
      for (const auto& s : summarize(records)) {
        std::cout << to_string(s.scenario) << " sigma="
                  << (s.sigma ? std::to_string(*s.sigma) : std::string("all"))
                  << " mean|dPSNR|=" << s.mean_abs_delta_psnr << " dB"
                  << " tsp_ratio=" << s.tsp_ratio << " total_ratio=" << s.total_ratio << "\n";
      }
      std::cout << "wrote " << records.size() << " rows to " << matrix_out << "\n";
    } else if (*train) {
      DenoiseConfig base =
          train_config.empty() ? DenoiseConfig{} : parse_denoise_config(read_file(train_config));
      std::vector<Image> images = load_training(train_images, train_quick);
      FilterBank bank;
      if (!train_scenario.empty()) {
        bank = train_bank(images, train_sigma, parse_scenario(train_scenario), base, train_lambda);
      } else {
        base.sigma = train_sigma;
        std::vector<TrainingSample> samples;
        for (std::size_t i = 0; i < images.size(); ++i) {
          samples.push_back({images[i], train_sigma, base.seed + i});
        }
        bank = learn_filters(samples, base, train_lambda);
      }
      save_filter_bank(bank, train_out);
      std::cout << "wrote " << bank.taps.size() << " filters to " << train_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
