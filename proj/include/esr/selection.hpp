#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "esr/error.hpp"
#include "esr/features.hpp"
#include "esr/fern.hpp"

namespace esr {

/// Anything that exposes pixel intensities as an N x P matrix. Tests
/// substitute counting wrappers to audit how often columns are read.
template <typename M>
concept PixelMatrixLike = requires(const M& m, std::size_t i) {
  { m.rows() } -> std::convertible_to<std::size_t>;
  { m.cols() } -> std::convertible_to<std::size_t>;
  { m.at(i, i) } -> std::convertible_to<double>;
};

/// Sample covariances between all pixel-column pairs, computed once per
/// stage and shared by every fern in it.
struct CovarianceCache {
  std::size_t n_pixels = 0;
  std::size_t sample_count = 0;
  std::vector<double> pixel_cov;    // n_pixels x n_pixels, row major
  std::vector<double> pixel_means;  // n_pixels

  double cov(std::size_t m, std::size_t n) const { return pixel_cov[m * n_pixels + n]; }
};

template <PixelMatrixLike M>
CovarianceCache precompute_pixel_covariance(const M& rho) {
  const std::size_t n = rho.rows(), p = rho.cols();
  if (n < 2) throw UsageError("precompute_pixel_covariance: need at least 2 samples");
  CovarianceCache cache;
  cache.n_pixels = p;
  cache.sample_count = n;
  cache.pixel_means.assign(p, 0.0);
  cache.pixel_cov.assign(p * p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += rho.at(i, j);
    cache.pixel_means[j] = s / double(n);
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i)
        s += (rho.at(i, j) - cache.pixel_means[j]) * (rho.at(i, k) - cache.pixel_means[k]);
      const double c = s / double(n - 1);
      cache.pixel_cov[j * p + k] = c;
      cache.pixel_cov[k * p + j] = c;
    }
  }
  return cache;
}

/// Targets projected onto one Gaussian direction.
struct ProjectedTarget {
  std::vector<double> y_prob;
  double variance = 0.0;
};

/// Projects each target row onto a direction with i.i.d. unit-Gaussian
/// components. Consumes exactly target-dimension normal draws from rng.
inline ProjectedTarget project_targets(std::span<const std::vector<double>> y, Rng& rng) {
  if (y.size() < 2) throw UsageError("project_targets: need at least 2 samples");
  const std::size_t dim = y[0].size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& c : v) c = gauss(rng);

  ProjectedTarget proj;
  proj.y_prob.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < dim; ++j) s += y[i][j] * v[j];
    proj.y_prob[i] = s;
  }
  double mean = 0;
  for (double x : proj.y_prob) mean += x;
  mean /= double(proj.y_prob.size());
  double var = 0;
  for (double x : proj.y_prob) var += (x - mean) * (x - mean);
  proj.variance = var / double(proj.y_prob.size() - 1);
  return proj;
}

/// cov(y_prob, rho_j) for every column j; one pass per column, O(NP) per
/// projection.
template <PixelMatrixLike M>
std::vector<double> target_pixel_covariance(const ProjectedTarget& proj, const M& rho,
                                            const CovarianceCache& cache) {
  const std::size_t n = rho.rows(), p = rho.cols();
  double mean = 0;
  for (double x : proj.y_prob) mean += x;
  mean /= double(n);
  std::vector<double> out(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      s += (proj.y_prob[i] - mean) * (rho.at(i, j) - cache.pixel_means[j]);
    out[j] = s / double(n - 1);
  }
  return out;
}

/// Correlation of the projection with the difference feature rho_m - rho_n,
/// from cached covariances only:
///
///   corr = (cov(y,rho_m) - cov(y,rho_n)) / sqrt(var(y) * var(rho_m - rho_n))
///   var(rho_m - rho_n) = cov(m,m) + cov(n,n) - 2 cov(m,n)
///
/// Equals the Pearson correlation with the materialized difference column.
/// Returns nullopt for degenerate candidates (constant difference feature
/// or constant projection); those are never selected.
inline std::optional<double> correlation_with_difference(
    const ProjectedTarget& proj, const CovarianceCache& cache,
    std::span<const double> target_pixel_cov, std::size_t m, std::size_t n) {
  const double var_diff = cache.cov(m, m) + cache.cov(n, n) - 2.0 * cache.cov(m, n);
  const double denom_sq = proj.variance * var_diff;
  if (!(denom_sq > 0.0)) return std::nullopt;
  return (target_pixel_cov[m] - target_pixel_cov[n]) / std::sqrt(denom_sq);
}

/// Greedy correlation-based selection: for each of f rounds, draws a fresh
/// Gaussian projection of the current targets and picks the ordered pair
/// (m, n), m != n, maximizing the signed correlation with rho_m - rho_n.
/// Ties keep the lexicographically smallest pair. Duplicate pairs across
/// rounds are allowed. Consumes rng only through the f projection draws.
template <PixelMatrixLike M>
std::vector<FeaturePair> select_features(std::span<const std::vector<double>> y,
                                         const M& rho, const CovarianceCache& cache,
                                         std::size_t f, Rng& rng) {
  const std::size_t p = rho.cols();
  if (p < 2) throw UsageError("select_features: need at least 2 pixel columns");
  if (f < 1) throw UsageError("select_features: need f >= 1");

  std::vector<FeaturePair> selected;
  selected.reserve(f);
  for (std::size_t round = 0; round < f; ++round) {
    const ProjectedTarget proj = project_targets(y, rng);
    const std::vector<double> tp_cov = target_pixel_covariance(proj, rho, cache);

    bool found = false;
    FeaturePair best;
    double best_corr = 0;
    for (std::size_t m = 0; m < p; ++m) {
      for (std::size_t n = 0; n < p; ++n) {
        if (m == n) continue;
        const auto corr = correlation_with_difference(proj, cache, tp_cov, m, n);
        if (!corr) continue;
        if (!found || *corr > best_corr) {
          found = true;
          best = {m, n};
          best_corr = *corr;
        }
      }
    }
    if (!found)
      throw DegenerateError("select_features: no valid candidate pair "
                            "(constant features or zero-variance projection)");
    selected.push_back(best);
  }
  return selected;
}

}  // namespace esr
