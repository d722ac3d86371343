#pragma once

#include <algorithm>
#include <cmath>

#include "esr/geometry.hpp"
#include "esr/image.hpp"
#include "esr/pnm.hpp"

namespace esr {

/// Grayscale image promoted to RGB with filled disks at the landmarks.
/// Points (or disk parts) outside the image are clipped.
inline RgbImage draw_landmarks(const Image& img, const Shape& shape, int radius = 2,
                               std::uint8_t r = 255, std::uint8_t g = 64,
                               std::uint8_t b = 32) {
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[3 * i] = img.pixels[i];
    out.pixels[3 * i + 1] = img.pixels[i];
    out.pixels[3 * i + 2] = img.pixels[i];
  }
  const double rr = double(radius) * radius;
  for (std::size_t j = 0; j < shape.n_landmarks(); ++j) {
    const double cx = shape.x(j), cy = shape.y(j);
    const int x0 = std::max(0, int(std::floor(cx - radius)));
    const int x1 = std::min(img.width - 1, int(std::ceil(cx + radius)));
    const int y0 = std::max(0, int(std::floor(cy - radius)));
    const int y1 = std::min(img.height - 1, int(std::ceil(cy + radius)));
    for (int py = y0; py <= y1; ++py)
      for (int px = x0; px <= x1; ++px) {
        const double dx = px - cx, dy = py - cy;
        if (dx * dx + dy * dy > rr) continue;
        const std::size_t at = 3 * (std::size_t(py) * img.width + px);
        out.pixels[at] = r;
        out.pixels[at + 1] = g;
        out.pixels[at + 2] = b;
      }
  }
  return out;
}

}  // namespace esr
