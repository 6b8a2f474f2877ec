#include "patchorder/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "parallel.hpp"
#include "patchorder/pipeline.hpp"
#include "patchorder/random.hpp"

namespace patchorder {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f6973;  // "nois"
constexpr std::uint64_t kTrainStream = 0x74726169;  // "trai"

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw std::invalid_argument(key + ": expected a boolean, got '" + text + "'");
}

SubsetCap parse_cap(const std::string& text) {
  if (text == "inf" || text == "none" || text == "original") return std::nullopt;
  return to_int<std::size_t>("cap", text);
}

std::string format_cap(const SubsetCap& cap) { return cap ? std::to_string(*cap) : "inf"; }

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_csv_double(const std::string& key, const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  return to_double(key, text);
}

// key=value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::filesystem::path> expand_paths(const std::string& value,
                                                const std::filesystem::path& base_dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& item : split(value, ',')) {
    if (item.empty()) continue;
    std::filesystem::path p(item);
    if (p.is_relative()) p = base_dir / p;
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

const std::vector<std::string> kCsvColumns = {
    "image",          "sigma",          "scenario",        "cap",
    "W",              "X",              "repetition",      "seed",
    "input_psnr",     "output_psnr",    "tsp_solve_wall_s", "tsp_solve_sum_s",
    "filter_s",       "total_s",        "tsp_fraction",    "tour_count",
    "width",          "height",         "timing_comparable"};

}  // namespace

MissingInputsError::MissingInputsError(std::vector<std::string> missing)
    : std::runtime_error([&] {
        std::string msg = "missing inputs:";
        for (const auto& m : missing) msg += "\n  " + m;
        return msg;
      }()),
      missing_(std::move(missing)) {}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::original: return "original";
    case Scenario::prop20k: return "prop20k";
    case Scenario::prop10k: return "prop10k";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& text) {
  if (text == "original") return Scenario::original;
  if (text == "prop20k") return Scenario::prop20k;
  if (text == "prop10k") return Scenario::prop10k;
  throw std::invalid_argument("unknown scenario '" + text + "'");
}

SubsetCap scenario_cap(Scenario scenario) {
  switch (scenario) {
    case Scenario::original: return std::nullopt;
    case Scenario::prop20k: return 20000;
    case Scenario::prop10k: return 10000;
  }
  return std::nullopt;
}

DenoiseConfig parse_denoise_config(const std::string& text,
                                   std::map<std::string, std::string>* unknown) {
  DenoiseConfig cfg;
  for (const auto& [key, value] : parse_kv(text)) {
    if (key == "sigma") {
      cfg.sigma = to_double(key, value);
    } else if (key == "patch_side") {
      cfg.patch_side = to_int<std::size_t>(key, value);
    } else if (key == "tau") {
      cfg.tau = to_double(key, value);
    } else if (key == "K") {
      cfg.K = to_int<std::size_t>(key, value);
    } else if (key == "B") {
      cfg.branch = to_int<std::size_t>(key, value);
    } else if (key == "window") {
      cfg.window = value == "inf" ? kUnlimitedWindow : to_int<std::size_t>(key, value);
    } else if (key == "cap") {
      cfg.cap = parse_cap(value);
    } else if (key == "filter_mode") {
      cfg.filter_mode = parse_filter_mode(value);
    } else if (key == "seed") {
      cfg.seed = to_int<std::uint64_t>(key, value);
    } else if (key == "threads") {
      cfg.threads = to_int<std::size_t>(key, value);
    } else if (unknown) {
      (*unknown)[key] = value;
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

MatrixConfig parse_matrix_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> extra;
  // "sigma" may be a list here, so pull it out before the scalar parser sees it.
  std::string sigma_list;
  std::string filtered;
  for (const auto& [key, value] : parse_kv(text)) {
    if (key == "sigma" || key == "sigmas") {
      sigma_list = value;
    } else {
      filtered += key + "=" + value + "\n";
    }
  }
  MatrixConfig cfg;
  cfg.base = parse_denoise_config(filtered, &extra);
  if (!sigma_list.empty()) {
    cfg.sigmas.clear();
    for (const auto& s : split(sigma_list, ',')) cfg.sigmas.push_back(to_double("sigma", s));
  }
  for (const auto& [key, value] : extra) {
    if (key == "images") {
      cfg.images = expand_paths(value, base_dir);
    } else if (key == "train_images") {
      cfg.train_images = expand_paths(value, base_dir);
    } else if (key == "filters_dir") {
      std::filesystem::path p(value);
      cfg.filters_dir = p.is_relative() ? base_dir / p : p;
    } else if (key == "scenarios") {
      cfg.scenarios.clear();
      for (const auto& s : split(value, ',')) cfg.scenarios.push_back(parse_scenario(s));
    } else if (key == "repetitions") {
      cfg.repetitions = to_int<std::size_t>(key, value);
    } else if (key == "quick") {
      cfg.quick = to_bool(key, value);
    } else if (key == "quick_side") {
      cfg.quick_side = to_int<std::size_t>(key, value);
    } else if (key == "parallel") {
      cfg.parallel = to_bool(key, value);
    } else if (key == "lambda") {
      cfg.lambda = to_double(key, value);
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  if (cfg.repetitions == 0) throw std::invalid_argument("repetitions must be at least 1");
  if (cfg.sigmas.empty()) throw std::invalid_argument("at least one sigma is required");
  for (double sigma : cfg.sigmas) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma values must be positive");
  }
  return cfg;
}

MatrixConfig load_matrix_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputsError({"config file: " + path.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix_config(buf.str(), path.parent_path());
}

std::string filter_bank_filename(double sigma, Scenario scenario) {
  return "sigma" + fmt(sigma) + "_" + to_string(scenario) + ".txt";
}

ExperimentRecord single_run(const Image& clean, const std::string& name, double sigma,
                            Scenario scenario, std::uint64_t seed, const FilterBank& bank,
                            const DenoiseConfig& base, Image* denoised) {
  DenoiseConfig cfg = base;
  cfg.sigma = sigma;
  cfg.cap = scenario_cap(scenario);
  cfg.seed = seed;

  const Image noisy = add_gaussian_noise(clean, sigma, derive_seed(seed, {kNoiseStream}));
  const DenoiseResult result = denoise(noisy, cfg, bank, &clean);

  ExperimentRecord rec;
  rec.image = name;
  rec.sigma = sigma;
  rec.scenario = scenario;
  rec.cap = cfg.cap;
  rec.W = result.W;
  rec.X = result.X;
  rec.seed = seed;
  rec.input_psnr = psnr(noisy, clean);
  rec.output_psnr = *result.psnr_vs_clean;
  rec.tsp_solve_wall = result.timings.tsp_solve_wall;
  rec.tsp_solve_sum = result.timings.tsp_solve_sum;
  rec.filter_seconds = result.timings.filter;
  rec.total_seconds = result.timings.total;
  rec.tour_count = result.tour_count;
  rec.width = clean.width;
  rec.height = clean.height;
  if (denoised) *denoised = result.output;
  return rec;
}

FilterBank train_bank(const std::vector<Image>& training, double sigma, Scenario scenario,
                      const DenoiseConfig& base, double lambda) {
  DenoiseConfig cfg = base;
  cfg.sigma = sigma;
  cfg.cap = scenario_cap(scenario);
  std::vector<TrainingSample> samples;
  samples.reserve(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    const auto sigma_bits = static_cast<std::uint64_t>(std::llround(sigma * 1000.0));
    samples.push_back({training[i], sigma, derive_seed(base.seed, {kTrainStream, sigma_bits, i})});
  }
  return learn_filters(samples, cfg, lambda);
}

std::vector<ExperimentRecord> run_matrix(const MatrixConfig& config, std::ostream* log) {
  std::vector<std::string> missing;
  if (config.images.empty()) missing.push_back("images: none configured");
  for (const auto& p : config.images) {
    if (!std::filesystem::is_regular_file(p)) missing.push_back("image: " + p.string());
  }
  for (const auto& p : config.train_images) {
    if (!std::filesystem::is_regular_file(p)) missing.push_back("training image: " + p.string());
  }
  const bool can_train = !config.train_images.empty();
  for (double sigma : config.sigmas) {
    for (Scenario sc : config.scenarios) {
      const bool have_file =
          config.filters_dir &&
          std::filesystem::is_regular_file(*config.filters_dir / filter_bank_filename(sigma, sc));
      if (!have_file && !can_train) {
        missing.push_back("filter bank: " +
                          (config.filters_dir ? (*config.filters_dir /
                                                 filter_bank_filename(sigma, sc)).string()
                                              : filter_bank_filename(sigma, sc)) +
                          " (or train_images)");
      }
    }
  }
  if (!missing.empty()) throw MissingInputsError(std::move(missing));

  auto prepare = [&](const std::filesystem::path& p) {
    Image img = load_image(p);
    return config.quick ? center_crop(img, config.quick_side) : img;
  };
  std::vector<Image> tests;
  std::vector<std::string> names;
  for (const auto& p : config.images) {
    tests.push_back(prepare(p));
    names.push_back(p.stem().string());
  }
  std::vector<Image> training;
  for (const auto& p : config.train_images) training.push_back(prepare(p));

  std::map<std::pair<double, Scenario>, FilterBank> banks;
  for (double sigma : config.sigmas) {
    for (Scenario sc : config.scenarios) {
      const auto file =
          config.filters_dir ? *config.filters_dir / filter_bank_filename(sigma, sc)
                             : std::filesystem::path{};
      if (config.filters_dir && std::filesystem::is_regular_file(file)) {
        banks[{sigma, sc}] = load_filter_bank(file);
      } else {
        if (log) *log << "training filters sigma=" << sigma << " scenario=" << to_string(sc) << "\n";
        banks[{sigma, sc}] = train_bank(training, sigma, sc, config.base, config.lambda);
      }
    }
  }

  struct Task {
    std::size_t image;
    double sigma;
    std::size_t rep;
    Scenario scenario;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    for (double sigma : config.sigmas) {
      for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        for (Scenario sc : config.scenarios) tasks.push_back({i, sigma, rep, sc});
      }
    }
  }

  std::vector<ExperimentRecord> records(tasks.size());
  const std::size_t workers =
      config.parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1;
  detail::parallel_for(tasks.size(), workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const std::uint64_t seed = config.base.seed + task.rep;
    ExperimentRecord rec = single_run(tests[task.image], names[task.image], task.sigma,
                                      task.scenario, seed, banks.at({task.sigma, task.scenario}),
                                      config.base);
    rec.repetition = task.rep;
    rec.timing_comparable = !config.parallel;
    if (log && workers == 1) *log << describe(rec) << "\n";
    records[t] = std::move(rec);
  });
  return records;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<ScenarioSummary> summarize(const std::vector<ExperimentRecord>& records) {
  using RunKey = std::tuple<std::string, double, std::size_t>;  // image, sigma, repetition
  using CellKey = std::pair<std::string, double>;               // image, sigma
  std::map<RunKey, double> original_psnr;
  std::map<CellKey, std::vector<double>> original_tsp;
  std::map<CellKey, std::vector<double>> original_total;
  std::vector<Scenario> present;
  std::vector<double> sigmas;
  for (const auto& r : records) {
    if (std::find(present.begin(), present.end(), r.scenario) == present.end()) {
      present.push_back(r.scenario);
    }
    if (std::find(sigmas.begin(), sigmas.end(), r.sigma) == sigmas.end()) sigmas.push_back(r.sigma);
    if (r.scenario != Scenario::original) continue;
    original_psnr[{r.image, r.sigma, r.repetition}] = r.output_psnr;
    original_tsp[{r.image, r.sigma}].push_back(r.tsp_solve_wall);
    original_total[{r.image, r.sigma}].push_back(r.total_seconds);
  }
  std::sort(present.begin(), present.end());
  std::sort(sigmas.begin(), sigmas.end());

  std::vector<ScenarioSummary> out;
  for (Scenario sc : present) {
    if (sc == Scenario::original) continue;
    std::vector<std::optional<double>> groups;
    for (double s : sigmas) groups.emplace_back(s);
    groups.emplace_back(std::nullopt);
    for (const auto& sigma : groups) {
      ScenarioSummary sum;
      sum.scenario = sc;
      sum.sigma = sigma;
      std::map<CellKey, std::vector<double>> tsp;
      std::map<CellKey, std::vector<double>> total;
      double delta = 0.0;
      double abs_delta = 0.0;
      for (const auto& r : records) {
        if (r.scenario != sc || (sigma && r.sigma != *sigma)) continue;
        tsp[{r.image, r.sigma}].push_back(r.tsp_solve_wall);
        total[{r.image, r.sigma}].push_back(r.total_seconds);
        const auto it = original_psnr.find({r.image, r.sigma, r.repetition});
        if (it == original_psnr.end()) continue;
        delta += r.output_psnr - it->second;
        abs_delta += std::abs(r.output_psnr - it->second);
        ++sum.pairs;
      }
      if (sum.pairs == 0) continue;
      sum.mean_delta_psnr = delta / static_cast<double>(sum.pairs);
      sum.mean_abs_delta_psnr = abs_delta / static_cast<double>(sum.pairs);
      double tsp_ratio = 0.0;
      double total_ratio = 0.0;
      std::size_t cells = 0;
      for (const auto& [cell, walls] : tsp) {
        const double orig_tsp = median(original_tsp[cell]);
        const double orig_total = median(original_total[cell]);
        if (orig_tsp <= 0.0 || orig_total <= 0.0) continue;
        tsp_ratio += median(walls) / orig_tsp;
        total_ratio += median(total[cell]) / orig_total;
        ++cells;
      }
      if (cells > 0) {
        sum.tsp_ratio = tsp_ratio / static_cast<double>(cells);
        sum.total_ratio = total_ratio / static_cast<double>(cells);
      }
      out.push_back(sum);
    }
  }
  return out;
}

std::string format_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "# patchorder-bench schema_version=" << kCsvSchemaVersion << "\n";
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) out << (c ? "," : "") << kCsvColumns[c];
  out << "\n";
  for (const auto& r : records) {
    out << r.image << ',' << fmt(r.sigma) << ',' << to_string(r.scenario) << ','
        << format_cap(r.cap) << ',' << r.W << ',' << r.X << ',' << r.repetition << ',' << r.seed
        << ',' << fmt(r.input_psnr) << ',' << fmt(r.output_psnr) << ',' << fmt(r.tsp_solve_wall)
        << ',' << fmt(r.tsp_solve_sum) << ',' << fmt(r.filter_seconds) << ','
        << fmt(r.total_seconds) << ',' << fmt(r.tsp_fraction()) << ',' << r.tour_count << ','
        << r.width << ',' << r.height << ',' << (r.timing_comparable ? 1 : 0) << "\n";
  }
  for (const auto& s : summarize(records)) {
    out << "# summary scenario=" << to_string(s.scenario)
        << " sigma=" << (s.sigma ? fmt(*s.sigma) : std::string("all"))
        << " pairs=" << s.pairs << " mean_delta_psnr=" << fmt(s.mean_delta_psnr)
        << " mean_abs_delta_psnr=" << fmt(s.mean_abs_delta_psnr)
        << " tsp_wall_ratio=" << fmt(s.tsp_ratio) << " total_ratio=" << fmt(s.total_ratio)
        << "\n";
  }
  return out.str();
}

std::vector<ExperimentRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool saw_schema = false;
  bool saw_header = false;
  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "schema_version=";
      if (const auto pos = line.find(tag); pos != std::string::npos && !saw_header) {
        const int version = to_int<int>("schema_version", trim(line.substr(pos + tag.size())));
        if (version != kCsvSchemaVersion) {
          throw std::runtime_error("csv: unsupported schema version " + std::to_string(version));
        }
        saw_schema = true;
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (!saw_header) {
      if (cells != kCsvColumns) throw std::runtime_error("csv: unexpected header row");
      saw_header = true;
      continue;
    }
    if (cells.size() != kCsvColumns.size()) {
      throw std::runtime_error("csv: row has " + std::to_string(cells.size()) + " cells");
    }
    ExperimentRecord r;
    r.image = cells[0];
    r.sigma = to_double("sigma", cells[1]);
    r.scenario = parse_scenario(cells[2]);
    r.cap = parse_cap(cells[3]);
    r.W = to_int<std::size_t>("W", cells[4]);
    r.X = to_int<std::size_t>("X", cells[5]);
    r.repetition = to_int<std::size_t>("repetition", cells[6]);
    r.seed = to_int<std::uint64_t>("seed", cells[7]);
    r.input_psnr = parse_csv_double("input_psnr", cells[8]);
    r.output_psnr = parse_csv_double("output_psnr", cells[9]);
    r.tsp_solve_wall = to_double("tsp_solve_wall_s", cells[10]);
    r.tsp_solve_sum = to_double("tsp_solve_sum_s", cells[11]);
    r.filter_seconds = to_double("filter_s", cells[12]);
    r.total_seconds = to_double("total_s", cells[13]);
    r.tour_count = to_int<std::size_t>("tour_count", cells[15]);
    r.width = to_int<std::size_t>("width", cells[16]);
    r.height = to_int<std::size_t>("height", cells[17]);
    r.timing_comparable = to_bool("timing_comparable", cells[18]);
    records.push_back(std::move(r));
  }
  if (!saw_schema) throw std::runtime_error("csv: missing schema_version line");
  if (!saw_header) throw std::runtime_error("csv: missing header row");
  return records;
}

void write_csv(const std::vector<ExperimentRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_csv(records);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string describe(const ExperimentRecord& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << r.image << " sigma=" << r.sigma << " " << to_string(r.scenario)
      << " cap=" << format_cap(r.cap) << " W=" << r.W << " X=" << r.X
      << " tours=" << r.tour_count << " psnr " << r.input_psnr << " -> " << r.output_psnr
      << " dB";
  out.precision(3);
  out << " tsp=" << r.tsp_solve_wall << "s total=" << r.total_seconds
      << "s tsp_fraction=" << r.tsp_fraction();
  return out.str();
}

}  // namespace patchorder
