#include "patchorder/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace patchorder {

Image::Image(std::size_t w, std::size_t h, std::vector<double> values)
    : width(w), height(h), data(std::move(values)) {
  if (data.size() != width * height) {
    throw std::invalid_argument("image data length does not match width*height");
  }
}

Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  Image out = img;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.data) v += noise(rng);
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("psnr: image dimensions differ");
  }
  if (a.data.empty()) throw std::invalid_argument("psnr: empty image");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sse += d * d;
  }
  if (sse == 0.0) return kInfinitePsnr;
  const double mse = sse / static_cast<double>(a.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw ImageIoError("pgm: truncated header");
  return bytes.substr(start, pos - start);
}

std::size_t parse_header_int(const std::string& token) {
  if (token.empty() || !std::all_of(token.begin(), token.end(),
                                    [](unsigned char c) { return std::isdigit(c); })) {
    throw ImageIoError("pgm: malformed header value '" + token + "'");
  }
  return std::stoul(token);
}

}  // namespace

Image decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw ImageIoError("pgm: not a binary P5 file");
  const std::size_t width = parse_header_int(next_token(bytes, pos));
  const std::size_t height = parse_header_int(next_token(bytes, pos));
  const std::size_t maxval = parse_header_int(next_token(bytes, pos));
  if (width == 0 || height == 0) throw ImageIoError("pgm: zero dimension");
  if (maxval == 0 || maxval > 255) throw ImageIoError("pgm: only 8-bit maxval is supported");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size()) throw ImageIoError("pgm: missing raster");
  ++pos;
  const std::size_t count = width * height;
  if (bytes.size() - pos < count) throw ImageIoError("pgm: truncated raster");
  Image img(width, height);
  for (std::size_t i = 0; i < count; ++i) {
    img.data[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i]));
  }
  return img;
}

std::string encode_pgm(const Image& img) {
  std::ostringstream out;
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::string raster(img.data.size(), '\0');
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::clamp(std::round(img.data[i]), 0.0, 255.0);
    raster[i] = static_cast<char>(static_cast<unsigned char>(v));
  }
  return out.str() + raster;
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_pgm(buf.str());
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

void save_image(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("write failed for " + path.string());
}

Image center_crop(const Image& img, std::size_t side) {
  const std::size_t w = std::min(side, img.width);
  const std::size_t h = std::min(side, img.height);
  const std::size_t r0 = (img.height - h) / 2;
  const std::size_t c0 = (img.width - w) / 2;
  Image out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) out.at(r, c) = img.at(r0 + r, c0 + c);
  }
  return out;
}

}  // namespace patchorder
