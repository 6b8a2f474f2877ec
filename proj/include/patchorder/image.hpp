#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace patchorder {

/// Grayscale image stored row-major in double precision. Nominal range is
/// [0, 255] but values outside it are allowed (noise is never clipped
/// in memory).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), data(w * h, fill) {}
  Image(std::size_t w, std::size_t h, std::vector<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const {
    return data[row * width + col];
  }
  double& at(std::size_t row, std::size_t col) {
    return data[row * width + col];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PSNR returned when the two images are identical.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// Adds i.i.d. N(0, sigma^2) noise. Deterministic for a given seed.
Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed);

/// 10 log10(255^2 / MSE); kInfinitePsnr when MSE is zero.
/// Throws std::invalid_argument on a dimension mismatch.
double psnr(const Image& a, const Image& b);

/// Reads an 8-bit binary PGM (P5, maxval <= 255).
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Values are rounded and clipped to [0, 255].
void save_image(const Image& img, const std::filesystem::path& path);

/// Parses P5 bytes already in memory.
Image decode_pgm(const std::string& bytes);
std::string encode_pgm(const Image& img);

/// Center crop to at most `side` x `side`.
Image center_crop(const Image& img, std::size_t side);

}  // namespace patchorder
