#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "esr/error.hpp"
#include "esr/geometry.hpp"
#include "esr/image.hpp"

namespace esr {

using Rng = std::mt19937_64;

/// A sampling location fixed in one landmark's local frame: offsets are in
/// normalized (mean-shape, unit-RMS) units.
struct LocalCoordinate {
  std::size_t landmark = 0;
  double dx = 0.0;
  double dy = 0.0;
};

struct SampleRef {
  const Image* image = nullptr;
  const Shape* shape = nullptr;
};

/// Draws p sampling locations: landmark uniform over [0, n_fp), offsets
/// uniform over [-kappa, kappa]^2.
inline std::vector<LocalCoordinate> generate_local_coordinates(
    std::size_t n_fp, std::size_t p, double kappa, Rng& rng) {
  if (n_fp < 1 || p < 1) throw UsageError("generate_local_coordinates: counts must be >= 1");
  if (!(kappa > 0.0)) throw UsageError("generate_local_coordinates: kappa must be > 0");
  std::uniform_int_distribution<std::size_t> lm(0, n_fp - 1);
  std::uniform_real_distribution<double> off(-kappa, kappa);
  std::vector<LocalCoordinate> coords(p);
  for (auto& c : coords) {
    c.landmark = lm(rng);
    c.dx = off(rng);
    c.dy = off(rng);
  }
  return coords;
}

/// Intensities sampled at shape-indexed locations: n_samples rows by
/// coords.size() columns, stored column major. Keeps the generating local
/// coordinates alongside the values.
class PixelFeatureMatrix {
public:
  PixelFeatureMatrix(std::size_t n_samples, std::vector<LocalCoordinate> coords)
      : n_rows_(n_samples),
        coords_(std::move(coords)),
        values_(n_samples * coords_.size(), 0.0) {}

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return coords_.size(); }
  const std::vector<LocalCoordinate>& coords() const { return coords_; }

  double at(std::size_t i, std::size_t p) const { return values_[p * n_rows_ + i]; }
  void set(std::size_t i, std::size_t p, double v) { values_[p * n_rows_ + i] = v; }

private:
  std::size_t n_rows_;
  std::vector<LocalCoordinate> coords_;
  std::vector<double> values_;
};

/// Maps one local coordinate to a global pixel position for the given
/// shape: the landmark position plus the offset carried back from the
/// normalized frame by the inverse of the shape's normalizing transform.
inline Point global_position(const Shape& shape, const SimilarityTransform& to_mean,
                             const LocalCoordinate& c) {
  const SimilarityTransform from_mean = invert_transform(to_mean);
  const Point d = from_mean.linear({c.dx, c.dy});
  return {shape.x(c.landmark) + d.x, shape.y(c.landmark) + d.y};
}

/// Samples the intensities for one image/shape pair. Out-of-bounds
/// positions clamp to the nearest border pixel.
inline std::vector<double> extract_pixels_single(
    const Image& image, const Shape& shape,
    std::span<const LocalCoordinate> coords, const Shape& mean) {
  const SimilarityTransform to_mean = align_similarity(shape, mean);
  const SimilarityTransform from_mean = invert_transform(to_mean);
  std::vector<double> out(coords.size());
  for (std::size_t p = 0; p < coords.size(); ++p) {
    const Point d = from_mean.linear({coords[p].dx, coords[p].dy});
    out[p] = image.sample_nearest(shape.x(coords[p].landmark) + d.x,
                                  shape.y(coords[p].landmark) + d.y);
  }
  return out;
}

inline PixelFeatureMatrix extract_shape_indexed_pixels(
    std::span<const SampleRef> samples, std::vector<LocalCoordinate> coords,
    const Shape& mean) {
  PixelFeatureMatrix rho(samples.size(), std::move(coords));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::vector<double> row =
        extract_pixels_single(*samples[i].image, *samples[i].shape, rho.coords(), mean);
    for (std::size_t p = 0; p < rho.cols(); ++p) rho.set(i, p, row[p]);
  }
  return rho;
}

/// Column m minus column n.
inline std::vector<double> pixel_difference_feature(const PixelFeatureMatrix& rho,
                                                    std::size_t m, std::size_t n) {
  if (m >= rho.cols() || n >= rho.cols())
    throw UsageError("pixel_difference_feature: column index out of range");
  std::vector<double> out(rho.rows());
  for (std::size_t i = 0; i < rho.rows(); ++i) out[i] = rho.at(i, m) - rho.at(i, n);
  return out;
}

}  // namespace esr
