#include "patchorder/filtering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace patchorder {

Taps delta_taps() {
  Taps t{};
  t[kFilterCenter] = 1.0;
  return t;
}

FilterBank delta_bank(FilterMode mode, std::size_t count) {
  FilterBank bank;
  bank.mode = mode;
  bank.taps.assign(mode == FilterMode::per_class ? 2 : count, delta_taps());
  return bank;
}

void check_bank(const FilterBank& bank, const Partition& partition) {
  if (bank.mode == FilterMode::per_class) {
    if (bank.taps.size() != 2) {
      throw FilterArityError("per-class filter bank must hold exactly 2 filters, has " +
                             std::to_string(bank.taps.size()));
    }
    return;
  }
  if (bank.taps.size() != partition.num_subsets()) {
    throw FilterArityError("per-subset filter bank holds " + std::to_string(bank.taps.size()) +
                           " filters but the partition has W+X = " +
                           std::to_string(partition.num_subsets()) + " subsets");
  }
}

std::size_t mirror_index(std::ptrdiff_t i, std::size_t length) {
  const auto period = static_cast<std::ptrdiff_t>(2 * length);
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  const auto len = static_cast<std::ptrdiff_t>(length);
  return static_cast<std::size_t>(r < len ? r : period - 1 - r);
}

void convolve_same(std::span<const double> signal, const Taps& taps, std::span<double> out) {
  const std::size_t n = signal.size();
  if (out.size() != n) throw std::invalid_argument("convolve_same: output length mismatch");
  if (n == 0) return;
  constexpr auto half = static_cast<std::ptrdiff_t>(kFilterCenter);
  const auto len = static_cast<std::ptrdiff_t>(n);

  auto edge_value = [&](std::ptrdiff_t i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < kFilterTaps; ++t) {
      acc += taps[t] * signal[mirror_index(i + half - static_cast<std::ptrdiff_t>(t), n)];
    }
    return acc;
  };

  const std::ptrdiff_t interior_lo = std::min(half, len);
  const std::ptrdiff_t interior_hi = std::max(interior_lo, len - half);
  for (std::ptrdiff_t i = 0; i < interior_lo; ++i) out[i] = edge_value(i);
  for (std::ptrdiff_t i = interior_lo; i < interior_hi; ++i) {
    const double* x = signal.data() + (i + half);
    double acc = 0.0;
    for (std::size_t t = 0; t < kFilterTaps; ++t) acc += taps[t] * x[-static_cast<std::ptrdiff_t>(t)];
    out[i] = acc;
  }
  for (std::ptrdiff_t i = interior_hi; i < len; ++i) out[i] = edge_value(i);
}

std::vector<double> convolve_same(std::span<const double> signal, const Taps& taps) {
  std::vector<double> out(signal.size());
  convolve_same(signal, taps, out);
  return out;
}

std::vector<std::vector<double>> apply_filter_block(const std::vector<std::vector<double>>& blocks,
                                                    const FilterBank& bank,
                                                    const Partition& partition) {
  check_bank(bank, partition);
  if (blocks.size() != partition.num_subsets()) {
    throw std::invalid_argument("apply_filter_block: block count does not match partition");
  }
  std::vector<std::vector<double>> out(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].size() != partition.subsets[i].size()) {
      throw std::invalid_argument("apply_filter_block: block " + std::to_string(i) +
                                  " length does not match its subset");
    }
    out[i] = convolve_same(blocks[i], bank.taps_for(i, partition));
  }
  return out;
}

// ---------------------------------------------------------------------------

RidgeNormalEquations::RidgeNormalEquations() = default;

void RidgeNormalEquations::add(std::span<const double> noisy, std::span<const double> clean) {
  const std::size_t n = noisy.size();
  if (clean.size() != n) throw std::invalid_argument("ridge: signal lengths differ");
  if (n == 0) return;
  constexpr auto half = static_cast<std::ptrdiff_t>(kFilterCenter);

  // ext[m + half] = x[m] for m in [-half, n + half), mirror-extended.
  scratch_.resize(n + 2 * kFilterCenter);
  for (std::ptrdiff_t m = -half; m < static_cast<std::ptrdiff_t>(n) + half; ++m) {
    scratch_[static_cast<std::size_t>(m + half)] = noisy[mirror_index(m, n)];
  }
  const double* ext = scratch_.data() + half;

  // Design row i has entries x_ext[i + a] for a = half - t. The Gram entry for
  // shifts (a, a + d) is a length-n window sum of ext[m] * ext[m + d], which
  // slides along a as the window start moves.
  for (std::ptrdiff_t d = 0; d < static_cast<std::ptrdiff_t>(kFilterTaps); ++d) {
    std::ptrdiff_t a = -half;
    double window = 0.0;
    for (std::ptrdiff_t m = a; m < a + static_cast<std::ptrdiff_t>(n); ++m) window += ext[m] * ext[m + d];
    for (; a + d <= half; ++a) {
      if (a > -half) {
        window += ext[a - 1 + static_cast<std::ptrdiff_t>(n)] * ext[a - 1 + static_cast<std::ptrdiff_t>(n) + d] -
                  ext[a - 1] * ext[a - 1 + d];
      }
      const auto t = static_cast<std::size_t>(half - a);
      const auto u = static_cast<std::size_t>(half - a - d);
      gram_[t * kFilterTaps + u] += window;
      if (t != u) gram_[u * kFilterTaps + t] += window;
    }
  }

  for (std::size_t t = 0; t < kFilterTaps; ++t) {
    const double* x = ext + (half - static_cast<std::ptrdiff_t>(t));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * clean[i];
    rhs_[t] += acc;
  }
  for (std::size_t i = 0; i < n; ++i) target_energy_ += clean[i] * clean[i];
  samples_ += n;
}

void RidgeNormalEquations::merge(const RidgeNormalEquations& other) {
  for (std::size_t i = 0; i < gram_.size(); ++i) gram_[i] += other.gram_[i];
  for (std::size_t i = 0; i < kFilterTaps; ++i) rhs_[i] += other.rhs_[i];
  target_energy_ += other.target_energy_;
  samples_ += other.samples_;
}

Taps RidgeNormalEquations::solve(double lambda) const {
  if (lambda < 0.0) throw std::invalid_argument("ridge lambda must be non-negative");
  using Mat = Eigen::Matrix<double, kFilterTaps, kFilterTaps, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<double, kFilterTaps, 1>;
  Mat a = Eigen::Map<const Mat>(gram_.data());
  a.diagonal().array() += lambda;
  const Vec b = Eigen::Map<const Vec>(rhs_.data());

  Eigen::LDLT<Mat> ldlt(a);
  const auto diag = ldlt.vectorD().cwiseAbs();
  const double scale = std::max(diag.maxCoeff(), std::numeric_limits<double>::min());
  if (ldlt.info() != Eigen::Success || diag.minCoeff() <= 1e-13 * scale) {
    throw SingularSystemError(
        "ridge normal matrix is singular; use lambda > 0 or more training data");
  }
  const Vec h = ldlt.solve(b);
  Taps out{};
  for (std::size_t t = 0; t < kFilterTaps; ++t) out[t] = h[static_cast<Eigen::Index>(t)];
  return out;
}

double RidgeNormalEquations::objective(const Taps& taps, double lambda) const {
  double quad = 0.0;
  double lin = 0.0;
  double norm = 0.0;
  for (std::size_t t = 0; t < kFilterTaps; ++t) {
    double row = 0.0;
    for (std::size_t u = 0; u < kFilterTaps; ++u) row += gram_[t * kFilterTaps + u] * taps[u];
    quad += taps[t] * row;
    lin += taps[t] * rhs_[t];
    norm += taps[t] * taps[t];
  }
  return quad - 2.0 * lin + target_energy_ + lambda * norm;
}

// ---------------------------------------------------------------------------

std::string to_string(FilterMode mode) {
  return mode == FilterMode::per_class ? "per-class" : "per-subset";
}

FilterMode parse_filter_mode(const std::string& text) {
  if (text == "per-class" || text == "per_class") return FilterMode::per_class;
  if (text == "per-subset" || text == "per_subset") return FilterMode::per_subset;
  throw std::invalid_argument("unknown filter mode '" + text + "'");
}

std::string format_filter_bank(const FilterBank& bank) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  out << to_string(bank.mode) << ' ' << bank.trained_sigma << ' ' << bank.taps.size() << '\n';
  for (const auto& taps : bank.taps) {
    for (std::size_t t = 0; t < kFilterTaps; ++t) out << (t ? " " : "") << taps[t];
    out << '\n';
  }
  return out.str();
}

FilterBank parse_filter_bank(const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  std::string mode;
  FilterBank bank;
  std::size_t count = 0;
  if (!(in >> mode >> bank.trained_sigma >> count)) {
    throw std::runtime_error("filter bank: malformed header");
  }
  bank.mode = parse_filter_mode(mode);
  bank.taps.resize(count);
  for (std::size_t f = 0; f < count; ++f) {
    for (std::size_t t = 0; t < kFilterTaps; ++t) {
      if (!(in >> bank.taps[f][t])) {
        throw std::runtime_error("filter bank: expected 25 coefficients for filter " +
                                 std::to_string(f));
      }
    }
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error("filter bank: trailing data");
  if (bank.mode == FilterMode::per_class && count != 2) {
    throw std::runtime_error("filter bank: per-class mode requires exactly 2 filters");
  }
  return bank;
}

void save_filter_bank(const FilterBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_filter_bank(bank);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

FilterBank load_filter_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open filter bank " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_filter_bank(buf.str());
}

}  // namespace patchorder
