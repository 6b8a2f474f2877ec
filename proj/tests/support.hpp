#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "patchorder/image.hpp"

namespace patchorder::testing {

// Piecewise-smooth test picture: a gradient background, a bright disk,
// a dark rectangle and a band of stripes. Deterministic per seed.
inline Image synthetic_scene(std::size_t width, std::size_t height, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cx = width * (0.3 + 0.4 * u(rng));
  const double cy = height * (0.3 + 0.4 * u(rng));
  const double radius = std::min(width, height) * (0.15 + 0.1 * u(rng));
  const double period = 4.0 + 6.0 * u(rng);
  Image img(width, height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      double v = 60.0 + 100.0 * static_cast<double>(c) / static_cast<double>(width);
      const double dx = static_cast<double>(c) - cx;
      const double dy = static_cast<double>(r) - cy;
      if (dx * dx + dy * dy < radius * radius) v = 200.0;
      if (r > height / 8 && r < height / 3 && c > width / 10 && c < width / 2) v = 30.0;
      if (r > 2 * height / 3) v += 40.0 * std::sin(2.0 * M_PI * static_cast<double>(c) / period);
      img.at(r, c) = v;
    }
  }
  return img;
}

// Integer-valued random image in [0, 255].
inline Image random_image(std::size_t width, std::size_t height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Image img(width, height);
  for (double& v : img.data) v = u(rng);
  return img;
}

}  // namespace patchorder::testing
