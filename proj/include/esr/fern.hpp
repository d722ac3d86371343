#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "esr/error.hpp"
#include "esr/features.hpp"

namespace esr {

/// Index pair of a pixel-difference feature: column m minus column n.
struct FeaturePair {
  std::size_t m = 0;
  std::size_t n = 0;
};

/// The primitive regressor: F thresholded pixel-difference features index
/// one of 2^F bins, each holding a shape increment in the normalized frame.
struct Fern {
  std::vector<FeaturePair> pairs;
  std::vector<double> thresholds;
  std::vector<std::vector<double>> bin_outputs;
};

/// Bit f of the result is 1 iff features[f] >= thresholds[f]; bit 0 is the
/// first feature.
inline std::size_t bin_index(std::span<const double> features,
                             std::span<const double> thresholds) {
  if (features.size() != thresholds.size())
    throw UsageError("bin_index: feature/threshold length mismatch");
  std::size_t idx = 0;
  for (std::size_t f = 0; f < features.size(); ++f)
    if (features[f] >= thresholds[f]) idx |= std::size_t(1) << f;
  return idx;
}

/// F thresholds drawn i.i.d. uniform on [-0.2c, 0.2c], where c is the
/// largest absolute feature value observed over the training samples.
inline std::vector<double> sample_thresholds(double feature_range_c, std::size_t f,
                                             Rng& rng) {
  if (!(feature_range_c > 0.0))
    throw DegenerateError("sample_thresholds: constant features (range c <= 0)");
  std::uniform_real_distribution<double> dist(-0.2 * feature_range_c,
                                              0.2 * feature_range_c);
  std::vector<double> out(f);
  for (auto& t : out) t = dist(rng);
  return out;
}

/// Per-bin outputs: the plain average of the bin's targets damped by
/// 1/(1 + beta/|bin|). Empty bins get the zero vector. Each output
/// coordinate is checked to stay within the damped [min, max] span of its
/// bin's targets.
inline std::vector<std::vector<double>> compute_bin_outputs(
    std::span<const std::vector<double>> targets,
    std::span<const std::size_t> assignments, std::size_t n_bins, double beta) {
  if (!(beta >= 0.0)) throw UsageError("compute_bin_outputs: beta must be >= 0");
  const std::size_t dim = targets.empty() ? 0 : targets[0].size();
  std::vector<std::vector<double>> outputs(n_bins, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t b = assignments[i];
    if (b >= n_bins) throw UsageError("compute_bin_outputs: bin assignment out of range");
    ++counts[b];
    for (std::size_t j = 0; j < dim; ++j) outputs[b][j] += targets[i][j];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    const double nb = double(counts[b]);
    const double factor = 1.0 / (1.0 + beta / nb);
    for (std::size_t j = 0; j < dim; ++j) outputs[b][j] = outputs[b][j] / nb * factor;
  }

  // Span check: a damped bin average must lie inside the damped
  // coordinate-wise envelope of that bin's targets.
  std::vector<double> lo(n_bins * dim), hi(n_bins * dim);
  std::vector<bool> seen(n_bins, false);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t b = assignments[i];
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = targets[i][j];
      if (!seen[b]) {
        lo[b * dim + j] = hi[b * dim + j] = v;
      } else {
        lo[b * dim + j] = std::min(lo[b * dim + j], v);
        hi[b * dim + j] = std::max(hi[b * dim + j], v);
      }
    }
    seen[b] = true;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    const double factor = 1.0 / (1.0 + beta / double(counts[b]));
    for (std::size_t j = 0; j < dim; ++j) {
      const double l = lo[b * dim + j], u = hi[b * dim + j];
      const double slack = 1e-9 * (1.0 + std::abs(l) + std::abs(u));
      if (outputs[b][j] < factor * l - slack || outputs[b][j] > factor * u + slack)
        throw InternalError("compute_bin_outputs: bin output escaped target span");
    }
  }
  return outputs;
}

inline const std::vector<double>& apply_fern(const Fern& fern,
                                             std::span<const double> features) {
  return fern.bin_outputs[bin_index(features, fern.thresholds)];
}

}  // namespace esr
