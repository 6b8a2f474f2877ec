#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "patchorder/filtering.hpp"
#include "support.hpp"

using namespace patchorder;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> s(n);
  for (double& v : s) v = g(rng);
  return s;
}

Taps random_taps(std::uint64_t seed) {
  const auto v = random_signal(kFilterTaps, seed);
  Taps t{};
  std::copy(v.begin(), v.end(), t.begin());
  return t;
}

// Direct evaluation of the definition with explicit mirror padding.
std::vector<double> reference_convolution(const std::vector<double>& x, const Taps& h) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  auto at = [&](std::ptrdiff_t i) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return x[static_cast<std::size_t>(i)];
  };
  std::vector<double> out(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(kFilterTaps); ++t) {
      out[static_cast<std::size_t>(i)] +=
          h[static_cast<std::size_t>(t)] * at(i + static_cast<std::ptrdiff_t>(kFilterCenter) - t);
    }
  }
  return out;
}

// Solves the ridge problem from an explicit design matrix with Gaussian
// elimination and partial pivoting; shares no code with the library solver.
Taps oracle_ridge(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                  double lambda) {
  constexpr std::size_t n = kFilterTaps;
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (const auto& [x, y] : pairs) {
    std::vector<std::vector<double>> columns;
    for (std::size_t t = 0; t < n; ++t) {
      Taps unit{};
      unit[t] = 1.0;
      columns.push_back(reference_convolution(x, unit));
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < x.size(); ++i) a[r][c] += columns[r][i] * columns[c][i];
      }
      for (std::size_t i = 0; i < x.size(); ++i) a[r][n] += columns[r][i] * y[i];
    }
  }
  for (std::size_t r = 0; r < n; ++r) a[r][r] += lambda;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  Taps h{};
  for (std::size_t r = n; r-- > 0;) {
    double s = a[r][n];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * h[c];
    h[r] = s / a[r][r];
  }
  return h;
}

Partition two_class_partition(std::size_t smooth, std::size_t edge, SubsetCap cap) {
  Classification cls;
  cls.labels.assign(smooth, PatchClass::smooth);
  cls.labels.insert(cls.labels.end(), edge, PatchClass::edge);
  return partition_classes(cls, cap, 1);
}

}  // namespace

TEST_CASE("mirror_index reflects with repetition of the edge sample") {
  CHECK(mirror_index(-1, 5) == 0);
  CHECK(mirror_index(-2, 5) == 1);
  CHECK(mirror_index(5, 5) == 4);
  CHECK(mirror_index(6, 5) == 3);
  CHECK(mirror_index(3, 5) == 3);
  // Period 2L for indices far outside the signal.
  CHECK(mirror_index(-13, 3) == mirror_index(-13 + 6, 3));
  CHECK(mirror_index(14, 1) == 0);
}

TEST_CASE("delta taps pass signals through") {
  for (std::size_t n : {1u, 2u, 7u, 100u}) {
    const auto s = random_signal(n, n);
    CHECK(convolve_same(s, delta_taps()) == s);
  }
}

TEST_CASE("DC preservation and the three-tap box example") {
  Taps box{};
  box[kFilterCenter - 1] = box[kFilterCenter] = box[kFilterCenter + 1] = 1.0 / 3.0;
  const auto out = convolve_same(std::vector<double>{0, 3, 0}, box);
  REQUIRE(out.size() == 3);
  for (double v : out) CHECK(v == doctest::Approx(1.0));

  Taps h = random_taps(3);
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  for (double v : convolve_same(std::vector<double>(40, 6.5), h)) {
    CHECK(v == doctest::Approx(6.5).epsilon(1e-12));
  }
}

TEST_CASE("convolution orientation and agreement with the reference") {
  // A single tap at t = center + 1 delays the signal by one sample.
  Taps shift{};
  shift[kFilterCenter + 1] = 1.0;
  CHECK(convolve_same(std::vector<double>{1, 2, 3, 4}, shift) == std::vector<double>{1, 1, 2, 3});

  for (std::size_t n : {1u, 3u, 12u, 13u, 25u, 60u}) {
    const auto x = random_signal(n, 10 + n);
    const Taps h = random_taps(20 + n);
    const auto got = convolve_same(x, h);
    const auto want = reference_convolution(x, h);
    for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("convolution is linear") {
  const auto x = random_signal(50, 1);
  const auto y = random_signal(50, 2);
  const Taps h = random_taps(3);
  std::vector<double> combo(50);
  for (std::size_t i = 0; i < 50; ++i) combo[i] = 2.5 * x[i] - 0.75 * y[i];
  const auto fx = convolve_same(x, h);
  const auto fy = convolve_same(y, h);
  const auto fc = convolve_same(combo, h);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(fc[i] == doctest::Approx(2.5 * fx[i] - 0.75 * fy[i]).epsilon(1e-12));
  }
  std::vector<double> small(50);
  CHECK_THROWS_AS(convolve_same(x, h, std::span<double>(small.data(), 49)), std::invalid_argument);
}

TEST_CASE("block filtering") {
  SUBCASE("all-delta bank leaves blocks unchanged") {
    const Partition part = two_class_partition(30, 20, 10);
    std::vector<std::vector<double>> blocks;
    for (const auto& s : part.subsets) blocks.push_back(random_signal(s.size(), s.size()));
    CHECK(apply_filter_block(blocks, delta_bank(FilterMode::per_class), part) == blocks);
    CHECK(apply_filter_block(blocks, delta_bank(FilterMode::per_subset, part.num_subsets()), part) ==
          blocks);
  }
  SUBCASE("per-class mode with W=X=1 uses one filter per class") {
    const Partition part = two_class_partition(8, 5, std::nullopt);
    FilterBank bank{FilterMode::per_class, {random_taps(1), random_taps(2)}, 25.0};
    const std::vector<std::vector<double>> blocks{random_signal(8, 3), random_signal(5, 4)};
    const auto out = apply_filter_block(blocks, bank, part);
    CHECK(out[0] == convolve_same(blocks[0], bank.taps[0]));
    CHECK(out[1] == convolve_same(blocks[1], bank.taps[1]));
  }
  SUBCASE("blocks do not leak into each other") {
    const Partition part = two_class_partition(0, 20, 10);
    REQUIRE(part.num_subsets() == 2);
    FilterBank bank{FilterMode::per_subset, {random_taps(5), random_taps(6)}, 25.0};
    const auto a = random_signal(10, 7);
    const auto b = random_signal(10, 8);
    const auto out = apply_filter_block({a, b}, bank, part);
    const auto swapped = apply_filter_block({b, a}, bank, part);
    CHECK(out[0] == convolve_same(a, bank.taps[0]));
    CHECK(out[1] == convolve_same(b, bank.taps[1]));
    CHECK(swapped[0] == convolve_same(b, bank.taps[0]));
    CHECK(swapped[1] == convolve_same(a, bank.taps[1]));
    const auto changed_b = random_signal(10, 9);
    CHECK(apply_filter_block({a, changed_b}, bank, part)[0] == out[0]);
  }
  SUBCASE("arity mismatches") {
    const Partition part = two_class_partition(30, 20, 10);
    CHECK_THROWS_AS(check_bank(delta_bank(FilterMode::per_subset, 4), part), FilterArityError);
    const FilterBank three{FilterMode::per_class, {delta_taps(), delta_taps(), delta_taps()}, 25.0};
    CHECK_THROWS_AS(check_bank(three, part), FilterArityError);
    CHECK_NOTHROW(check_bank(delta_bank(FilterMode::per_subset, 5), part));
  }
}

TEST_CASE("ridge solution matches an independent elimination oracle") {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  RidgeNormalEquations eq;
  for (std::uint64_t s = 0; s < 4; ++s) {
    auto x = random_signal(40 + 17 * s, s);
    const auto y = convolve_same(x, random_taps(100));
    auto noisy_y = y;
    const auto jitter = random_signal(y.size(), 50 + s);
    for (std::size_t i = 0; i < y.size(); ++i) noisy_y[i] += 0.1 * jitter[i];
    eq.add(x, noisy_y);
    pairs.emplace_back(x, noisy_y);
  }
  const Taps got = eq.solve(1e-3);
  const Taps want = oracle_ridge(pairs, 1e-3);
  for (std::size_t t = 0; t < kFilterTaps; ++t) CHECK(got[t] == doctest::Approx(want[t]).epsilon(1e-8));
  CHECK(eq.samples() == 40 + 57 + 74 + 91);
}

TEST_CASE("ridge recovers the delta when targets equal inputs") {
  RidgeNormalEquations eq;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto x = random_signal(500, s);
    eq.add(x, x);
  }
  const Taps h = eq.solve(1e-8);
  const Taps d = delta_taps();
  double worst = 0.0;
  for (std::size_t t = 0; t < kFilterTaps; ++t) worst = std::max(worst, std::abs(h[t] - d[t]));
  CHECK(worst < 1e-3);
  CHECK(eq.objective(h, 1e-8) <= eq.objective(d, 1e-8) + 1e-12);
}

TEST_CASE("ridge edge cases") {
  RidgeNormalEquations eq;
  const auto x = random_signal(200, 1);
  eq.add(x, std::vector<double>(200, 0.0));
  for (double v : eq.solve(0.5)) CHECK(v == 0.0);

  // Constant inputs make every column identical: rank one.
  RidgeNormalEquations flat;
  flat.add(std::vector<double>(100, 2.0), std::vector<double>(100, 2.0));
  CHECK_THROWS_AS((void)flat.solve(0.0), SingularSystemError);
  CHECK_NOTHROW((void)flat.solve(1e-4));
  CHECK_THROWS_AS((void)flat.solve(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(eq.add(x, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("merging accumulators equals accumulating together") {
  RidgeNormalEquations a, b, both;
  const auto x1 = random_signal(80, 1), y1 = random_signal(80, 2);
  const auto x2 = random_signal(30, 3), y2 = random_signal(30, 4);
  a.add(x1, y1);
  b.add(x2, y2);
  both.add(x1, y1);
  both.add(x2, y2);
  a.merge(b);
  for (std::size_t i = 0; i < a.gram().size(); ++i) {
    CHECK(a.gram()[i] == doctest::Approx(both.gram()[i]).epsilon(1e-12));
  }
  const Taps ha = a.solve(1e-3), hb = both.solve(1e-3);
  for (std::size_t t = 0; t < kFilterTaps; ++t) CHECK(ha[t] == doctest::Approx(hb[t]).epsilon(1e-9));
}

TEST_CASE("learned filters reduce the ridge objective and are 25 taps") {
  DenoiseConfig cfg;
  cfg.K = 2;
  cfg.cap = 400;
  std::vector<TrainingSample> samples{{testing::synthetic_scene(48, 48, 1), 25.0, 1},
                                      {testing::synthetic_scene(48, 48, 2), 25.0, 2}};
  const FilterBank bank = learn_filters(samples, cfg);
  CHECK(bank.mode == FilterMode::per_class);
  REQUIRE(bank.taps.size() == 2);
  CHECK(bank.trained_sigma == 25.0);
  for (const auto& h : bank.taps) {
    CHECK(h.size() == kFilterTaps);
    // A denoising filter is close to DC-preserving.
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0).epsilon(0.1));
  }
  CHECK(learn_filters(samples, cfg) == bank);
  CHECK_THROWS_AS(learn_filters({}, cfg), std::invalid_argument);
}

TEST_CASE("per-subset learning needs a consistent subset count") {
  DenoiseConfig cfg;
  cfg.K = 1;
  cfg.cap = 300;
  cfg.filter_mode = FilterMode::per_subset;
  std::vector<TrainingSample> same{{testing::synthetic_scene(40, 40, 1), 25.0, 1}};
  const FilterBank bank = learn_filters(same, cfg);
  CHECK(bank.mode == FilterMode::per_subset);
  CHECK(bank.taps.size() >= 2);

  std::vector<TrainingSample> mixed{{testing::synthetic_scene(40, 40, 1), 25.0, 1},
                                    {testing::synthetic_scene(80, 80, 1), 25.0, 1}};
  CHECK_THROWS_AS(learn_filters(mixed, cfg), FilterArityError);
}

TEST_CASE("filter bank text round trip") {
  FilterBank bank{FilterMode::per_subset, {random_taps(1), random_taps(2), random_taps(3)}, 50.0};
  bank.taps[1][4] = 1.0 / 3.0;
  CHECK(parse_filter_bank(format_filter_bank(bank)) == bank);

  const auto path = std::filesystem::temp_directory_path() / "patchorder_test_bank.txt";
  const FilterBank cls{FilterMode::per_class, {random_taps(4), delta_taps()}, 25.0};
  save_filter_bank(cls, path);
  CHECK(load_filter_bank(path) == cls);
  std::filesystem::remove(path);

  CHECK(parse_filter_mode("per-class") == FilterMode::per_class);
  CHECK(parse_filter_mode(to_string(FilterMode::per_subset)) == FilterMode::per_subset);
  CHECK_THROWS_AS(parse_filter_mode("both"), std::invalid_argument);
  CHECK_THROWS(parse_filter_bank("per-class 25 2\n1 2 3\n"));
  CHECK_THROWS(parse_filter_bank("per-class 25 1\n" + std::string(25 * 2, ' ')));
  CHECK_THROWS(load_filter_bank("/nonexistent/bank.txt"));
}
