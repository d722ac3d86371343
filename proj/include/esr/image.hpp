#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "esr/error.hpp"

namespace esr {

/// Row-major grayscale image, intensities 0..255.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
    if (w < 1 || h < 1) throw UsageError("Image: dimensions must be >= 1");
    pixels.assign(std::size_t(w) * std::size_t(h), fill);
  }

  std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }

  /// Intensity at the nearest integer pixel; positions outside the image
  /// clamp to the nearest border pixel.
  double sample_nearest(double x, double y) const {
    int xi = int(std::llround(x));
    int yi = int(std::llround(y));
    xi = std::clamp(xi, 0, width - 1);
    yi = std::clamp(yi, 0, height - 1);
    return double(at(xi, yi));
  }
};

}  // namespace esr
