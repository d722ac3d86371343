#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "esr/dataset.hpp"
#include "esr/error.hpp"
#include "esr/geometry.hpp"
#include "esr/image.hpp"
#include "esr/landmark_io.hpp"
#include "esr/pnm.hpp"

namespace esr {

/// Pose, deformation, and appearance ranges for the synthetic generator.
/// The defaults produce moderate similarity jitter, smooth non-rigid
/// deformation, and per-sample lighting changes; zeroing the pose fields
/// yields identical shapes across samples, zeroing the appearance fields
/// freezes the rendering.
struct SynthOptions {
  double scale_min = 0.8;
  double scale_max = 1.25;
  double rot_max_deg = 25.0;
  double mode_sigma = 0.35;       // coefficient sigma on the orthonormal modes
  double translation_span = 1.0;  // 0 centers every sample
  double gain_jitter = 0.25;      // global intensity gain drawn from [1-g, 1+g]
  double bias_jitter = 12.0;      // global intensity offset drawn from [-b, +b]
  double amp_jitter = 0.35;       // per-blob amplitude factor drawn from [1-a, 1+a]
  double bg_tilt = 30.0;          // background gradient magnitude, random direction
  double blob_ecc = 0.8;          // landmark blob anisotropy: axis stretch up to 1+e
  std::size_t clutter_count = 12; // distractor blobs per image
  double clutter_amp = 55.0;      // distractor amplitude upper bound
  double clutter_near_frac = 0.0; // fraction of clutter placed around the shape
  double amp_lo = 25.0;           // weakest landmark blob amplitude
  double amp_hi = 60.0;           // strongest landmark blob amplitude
  double field_amp = 8.0;         // per-wave amplitude of the random texture field
  std::size_t field_waves = 10;   // cosine waves per sample, wavelengths 3..64 px
  double blob_sigma = 0.13;       // landmark blob width as a fraction of shape scale
  std::size_t n_modes = 3;        // deformation modes (coefficient sigma decays 1/k)
};

namespace detail {

/// Unit-frame base shape: an ellipse ring plus a smaller interior ring.
inline Shape synth_base_shape(std::size_t n_fp) {
  const std::size_t n_int = n_fp / 4;
  const std::size_t n_ell = n_fp - n_int;
  const double two_pi = 2.0 * std::numbers::pi;
  Shape s(n_fp);
  for (std::size_t j = 0; j < n_ell; ++j) {
    const double th = two_pi * double(j) / double(n_ell);
    s.set_point(j, {std::cos(th), 0.65 * std::sin(th)});
  }
  for (std::size_t j = 0; j < n_int; ++j) {
    const double th = two_pi * (double(j) + 0.5) / double(n_int);
    s.set_point(n_ell + j, {0.45 * std::cos(th), 0.45 * 0.65 * std::sin(th)});
  }
  return s;
}

/// Fixed orthonormal deformation fields, smooth in landmark index. Even
/// modes push radially, odd modes tangentially, with rising angular
/// frequency; phase offsets keep them nonzero on small landmark grids.
inline std::vector<std::vector<double>> synth_deformation_modes(std::size_t n_fp,
                                                                std::size_t n_modes) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::vector<double>> raw(n_modes, std::vector<double>(2 * n_fp));
  for (std::size_t m = 0; m < n_modes; ++m) {
    const double freq = 2.0 + double(m / 2);
    const double off = 0.7 + 0.5 * double(m);
    const bool radial = (m % 2 == 0);
    for (std::size_t j = 0; j < n_fp; ++j) {
      const double phi = two_pi * double(j) / double(n_fp);
      const double cx = std::cos(phi), cy = std::sin(phi);
      const double g = std::cos(freq * phi + off);
      raw[m][2 * j] = g * (radial ? cx : -cy);
      raw[m][2 * j + 1] = g * (radial ? cy : cx);
    }
  }
  // Gram-Schmidt.
  for (std::size_t k = 0; k < raw.size(); ++k) {
    for (std::size_t p = 0; p < k; ++p) {
      double dot = 0;
      for (std::size_t j = 0; j < raw[k].size(); ++j) dot += raw[k][j] * raw[p][j];
      for (std::size_t j = 0; j < raw[k].size(); ++j) raw[k][j] -= dot * raw[p][j];
    }
    double norm = 0;
    for (double v : raw[k]) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 1e-9))
      throw InternalError("synth_deformation_modes: degenerate mode basis");
    for (double& v : raw[k]) v /= norm;
  }
  return raw;
}

inline std::string synth_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%04zu", index);
  return buf;
}

}  // namespace detail

/// Writes count PGM images with landmark files (and tight bounding boxes) to
/// out_dir and returns the entries. Each sample poses a deformed copy of
/// the base shape by a random similarity and renders one intensity blob
/// per landmark (distinct base intensities) over a background gradient,
/// with per-sample lighting jitter and optional Gaussian pixel noise.
/// Deterministic given seed.
inline std::vector<DatasetEntry> generate_synthetic_dataset(
    std::size_t count, std::size_t n_fp, int image_size, double noise_sigma,
    std::uint64_t seed, const std::string& out_dir, const SynthOptions& opts = {}) {
  if (count < 1) throw UsageError("generate_synthetic_dataset: count must be >= 1");
  if (n_fp < 4) throw UsageError("generate_synthetic_dataset: n_fp must be >= 4");
  if (image_size < 16) throw UsageError("generate_synthetic_dataset: image size too small");
  if (!(noise_sigma >= 0.0)) throw UsageError("generate_synthetic_dataset: bad noise sigma");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir))
    throw DataError(out_dir + ": cannot create output directory");

  const Shape base = detail::synth_base_shape(n_fp);
  const auto modes = detail::synth_deformation_modes(n_fp, opts.n_modes);
  const int w = image_size, h = image_size;
  const double base_scale = 0.26 * image_size;
  const double margin = 2.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<DatasetEntry> entries;
  std::vector<double> buffer(std::size_t(w) * h);
  for (std::size_t idx = 0; idx < count; ++idx) {
    const double scale =
        base_scale * (opts.scale_min + (opts.scale_max - opts.scale_min) * unit(rng));
    const double rot =
        (2.0 * unit(rng) - 1.0) * opts.rot_max_deg * std::numbers::pi / 180.0;
    std::vector<double> coeff(modes.size());
    for (std::size_t m = 0; m < coeff.size(); ++m)
      coeff[m] = gauss(rng) * opts.mode_sigma / (1.0 + 0.5 * double(m));

    Shape posed(n_fp);
    const double ca = std::cos(rot), sa = std::sin(rot);
    for (std::size_t j = 0; j < n_fp; ++j) {
      double ux = base.x(j), uy = base.y(j);
      for (std::size_t m = 0; m < coeff.size(); ++m) {
        ux += coeff[m] * modes[m][2 * j];
        uy += coeff[m] * modes[m][2 * j + 1];
      }
      posed.set_point(j, {scale * (ca * ux - sa * uy), scale * (sa * ux + ca * uy)});
    }

    // Translation: uniform within the in-bounds interval, shrunk by
    // translation_span about its midpoint; falls back to centering when
    // the posed shape barely fits.
    const Box bb = bounding_box(posed);
    const auto pick_t = [&](double lo_bound, double hi_bound, double q0, double q1) {
      const double lo = lo_bound - q0, hi = hi_bound - q1;
      const double mid = 0.5 * (lo + hi);
      const double half = std::max(0.0, 0.5 * (hi - lo)) * opts.translation_span;
      return mid - half + 2.0 * half * unit(rng);
    };
    const double tx = pick_t(margin, double(w - 1) - margin, bb.x, bb.x + bb.w);
    const double ty = pick_t(margin, double(h - 1) - margin, bb.y, bb.y + bb.h);
    for (std::size_t j = 0; j < n_fp; ++j)
      posed.set_point(j, {posed.x(j) + tx, posed.y(j) + ty});

    // Per-sample appearance: lighting gain and offset, a background
    // gradient with random direction, and per-blob contrast jitter. The
    // landmarks stay the brightest local structure, but no fixed global
    // intensity template survives across samples.
    const double gain = 1.0 + (2.0 * unit(rng) - 1.0) * opts.gain_jitter;
    const double bias = (2.0 * unit(rng) - 1.0) * opts.bias_jitter;
    const double bg_theta = 2.0 * std::numbers::pi * unit(rng);
    const double gx = std::cos(bg_theta) * opts.bg_tilt;
    const double gy = std::sin(bg_theta) * opts.bg_tilt;
    for (int py = 0; py < h; ++py)
      for (int px = 0; px < w; ++px)
        buffer[std::size_t(py) * w + px] =
            55.0 + gx * (double(px) / double(w - 1) - 0.5) +
            gy * (double(py) / double(h - 1) - 0.5);
    // Per-sample texture: random cosine waves with wavelengths from a few
    // pixels up to half the image, so local brightness ordering differs
    // from sample to sample the way surface texture differs between real
    // subjects. The short wavelengths matter: they survive local pixel
    // differencing, unlike a purely smooth shading field.
    for (std::size_t wv = 0; wv < opts.field_waves; ++wv) {
      const double lambda = 3.0 * std::exp(std::log(64.0 / 3.0) * unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      const double wamp = opts.field_amp * (0.5 + unit(rng));
      const double fx = std::cos(theta) / lambda, fy = std::sin(theta) / lambda;
      for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px)
          buffer[std::size_t(py) * w + px] +=
              wamp * std::cos(2.0 * std::numbers::pi * (fx * px + fy * py) + phase);
    }
    const double sigma_b = opts.blob_sigma * scale;
    const auto add_blob = [&](double cx, double cy, double amp, double s1, double s2,
                              double psi) {
      const int win = int(std::ceil(3.5 * std::max(s1, s2)));
      const int x0 = std::max(0, int(std::floor(cx)) - win);
      const int x1 = std::min(w - 1, int(std::ceil(cx)) + win);
      const int y0 = std::max(0, int(std::floor(cy)) - win);
      const int y1 = std::min(h - 1, int(std::ceil(cy)) + win);
      const double cp = std::cos(psi), sp = std::sin(psi);
      for (int py = y0; py <= y1; ++py)
        for (int px = x0; px <= x1; ++px) {
          const double dx = px - cx, dy = py - cy;
          const double u = cp * dx + sp * dy, v = -sp * dx + cp * dy;
          buffer[std::size_t(py) * w + px] +=
              amp * std::exp(-0.5 * (u * u / (s1 * s1) + v * v / (s2 * s2)));
        }
    };
    // Landmark blobs: per-sample amplitude and elongation, so local intensity
    // around a landmark is only a statistical cue, not a fixed template.
    for (std::size_t j = 0; j < n_fp; ++j) {
      const double amp =
          (opts.amp_lo + (opts.amp_hi - opts.amp_lo) * double(j) / double(n_fp - 1)) *
          (1.0 + (2.0 * unit(rng) - 1.0) * opts.amp_jitter);
      const double s1 = sigma_b * (1.0 + opts.blob_ecc * unit(rng));
      const double s2 = sigma_b / (1.0 + opts.blob_ecc * unit(rng));
      const double psi = std::numbers::pi * unit(rng);
      add_blob(posed.x(j), posed.y(j), amp, s1, s2, psi);
    }
    // Distractor blobs; amplitudes overlap the landmark range, so brightness
    // alone cannot separate structure from clutter, and most sit in or near
    // the shape region where they compete with real landmarks.
    const Box shape_box = bounding_box(posed);
    for (std::size_t c = 0; c < opts.clutter_count; ++c) {
      double cx, cy;
      if (unit(rng) < opts.clutter_near_frac) {
        cx = shape_box.x - 0.15 * shape_box.w + 1.3 * shape_box.w * unit(rng);
        cy = shape_box.y - 0.15 * shape_box.h + 1.3 * shape_box.h * unit(rng);
      } else {
        cx = unit(rng) * double(w - 1);
        cy = unit(rng) * double(h - 1);
      }
      const double amp = 35.0 + (opts.clutter_amp - 35.0) * unit(rng);
      const double sc = sigma_b * (0.6 + unit(rng));
      add_blob(cx, cy, amp, sc, sc, 0.0);
    }

    Image img(w, h);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      double v = gain * buffer[i] + bias;
      if (noise_sigma > 0.0) v += gauss(rng) * noise_sigma;
      img.pixels[i] = std::uint8_t(std::clamp(std::llround(v), 0ll, 255ll));
    }

    const std::string stem = (fs::path(out_dir) / detail::synth_stem(idx)).string();
    save_image(img, stem + ".pgm");
    LandmarkFile lf{posed, bounding_box(posed)};
    save_landmarks(lf, stem + ".pts");
    entries.push_back({stem + ".pgm", stem + ".pts", lf.box});
  }
  return entries;
}

}  // namespace esr
