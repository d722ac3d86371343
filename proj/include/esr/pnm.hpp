#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "esr/error.hpp"
#include "esr/image.hpp"

namespace esr {

namespace detail {

// Reads the next header token, skipping whitespace and '#' comment lines.
inline std::string pnm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(c)) continue;
    break;
  }
  if (c == EOF) throw DataError(path + ": truncated PNM header");
  while (c != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(char(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  return tok;
}

inline int pnm_int(std::istream& in, const std::string& path) {
  const std::string tok = pnm_token(in, path);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ": bad integer '" + tok + "' in PNM header");
  }
}

}  // namespace detail

/// Loads a grayscale PGM image (binary P5 or ASCII P2, maxval <= 255).
inline Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");

  const std::string magic = detail::pnm_token(in, path);
  if (magic != "P5" && magic != "P2")
    throw DataError(path + ": unsupported PNM magic '" + magic + "' (want P5 or P2)");
  const int w = detail::pnm_int(in, path);
  const int h = detail::pnm_int(in, path);
  const int maxval = detail::pnm_int(in, path);
  if (w < 1 || h < 1) throw DataError(path + ": invalid PGM dimensions");
  if (maxval < 1 || maxval > 255)
    throw DataError(path + ": unsupported maxval " + std::to_string(maxval));

  Image img(w, h);
  if (magic == "P5") {
    // Header ends with exactly one whitespace byte before the raster.
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            std::streamsize(img.pixels.size()));
    if (std::size_t(in.gcount()) != img.pixels.size())
      throw DataError(path + ": truncated PGM pixel data");
  } else {
    for (auto& p : img.pixels) {
      const int v = detail::pnm_int(in, path);
      if (v < 0 || v > maxval)
        throw DataError(path + ": pixel value out of range");
      p = std::uint8_t(v);
    }
  }
  return img;
}

/// Writes a PGM file, binary (P5) by default or ASCII (P2).
inline void save_image(const Image& img, const std::string& path, bool binary = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << (binary ? "P5" : "P2") << "\n" << img.width << " " << img.height << "\n255\n";
  if (binary) {
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
  } else {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x)
        out << int(img.at(x, y)) << (x + 1 == img.width ? "" : " ");
      out << "\n";
    }
  }
  if (!out) throw DataError(path + ": write failed");
}

/// Interleaved 8-bit RGB image, used only for visualization output.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h * 3, 0) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::size_t i = (std::size_t(y) * width + x) * 3;
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
};

/// Writes a binary PPM (P6) file.
inline void save_image_ppm(const RgbImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            std::streamsize(img.pixels.size()));
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace esr
