#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esr/cascade.hpp"
#include "esr/dataset.hpp"
#include "esr/error.hpp"
#include "esr/textio.hpp"

namespace esr {

struct EvalOptions {
  /// Landmark pair (0-based) whose groundtruth distance normalizes the
  /// per-image error; nullopt disables normalization.
  std::optional<std::pair<std::size_t, std::size_t>> norm_pair{{0, 1}};
  std::size_t curve_points = 21;
};

struct EvalReport {
  std::vector<double> per_image_error;
  double mean_error = 0.0;
  double median_error = 0.0;
  std::vector<std::pair<double, double>> threshold_curve;  // (tau, fraction < tau)
};

/// ||predicted - groundtruth||_2 / (n_fp * normalizer).
inline double alignment_error(const Shape& predicted, const Shape& groundtruth,
                              double normalizer = 1.0) {
  double ss = 0;
  for (std::size_t j = 0; j < groundtruth.coords.size(); ++j) {
    const double d = predicted.coords[j] - groundtruth.coords[j];
    ss += d * d;
  }
  return std::sqrt(ss) / (double(groundtruth.n_landmarks()) * normalizer);
}

inline double lower_median(std::vector<double> v) {
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

namespace detail {

inline EvalReport summarize_errors(std::vector<double> errors, std::size_t curve_points) {
  EvalReport report;
  report.per_image_error = std::move(errors);
  double acc = 0, max_err = 0;
  for (double e : report.per_image_error) {
    acc += e;
    max_err = std::max(max_err, e);
  }
  report.mean_error = acc / double(report.per_image_error.size());
  report.median_error = lower_median(report.per_image_error);

  // Evenly spaced taus from 0 to just past the worst error, so the final
  // fraction reaches 1.0.
  const std::size_t k = std::max<std::size_t>(curve_points, 2);
  const double top = max_err > 0 ? max_err * (1.0 + 1e-9) : 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double tau = top * double(j + 1) / double(k);
    std::size_t below = 0;
    for (double e : report.per_image_error)
      if (e < tau) ++below;
    report.threshold_curve.emplace_back(tau,
                                        double(below) / double(report.per_image_error.size()));
  }
  return report;
}

}  // namespace detail

/// Predicts every dataset image (using its stored box when present) and
/// reports Eq.-style alignment errors against the groundtruth.
inline EvalReport evaluate(const ESRModel& model, const Dataset& dataset,
                           const TestParams& tp, const InitSet& init_set, Rng& rng,
                           const EvalOptions& opts = {}) {
  if (dataset.size() == 0) throw UsageError("evaluate: empty dataset");
  std::vector<double> errors;
  errors.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Shape& gt = dataset.shapes[i];
    double normalizer = 1.0;
    if (opts.norm_pair) {
      const auto [a, b] = *opts.norm_pair;
      if (a >= gt.n_landmarks() || b >= gt.n_landmarks())
        throw UsageError("evaluate: normalization landmark pair out of range");
      const double dx = gt.x(a) - gt.x(b), dy = gt.y(a) - gt.y(b);
      normalizer = std::sqrt(dx * dx + dy * dy);
      if (!(normalizer > 0.0))
        throw DegenerateError("evaluate: zero distance between normalization landmarks");
    }
    const Shape pred =
        predict(model, dataset.images[i], tp, init_set, rng, dataset.entries[i].box);
    errors.push_back(alignment_error(pred, gt, normalizer));
  }
  return detail::summarize_errors(std::move(errors), opts.curve_points);
}

inline void save_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << "esr_eval version 1\n";
  out << "images " << report.per_image_error.size() << "\n";
  out << "mean_error " << detail::fmt_g9(report.mean_error) << "\n";
  out << "median_error " << detail::fmt_g9(report.median_error) << "\n";
  out << "threshold_curve " << report.threshold_curve.size() << "\n";
  for (const auto& [tau, frac] : report.threshold_curve)
    out << detail::fmt_g9(tau) << " " << detail::fmt_g9(frac) << "\n";
  out << "per_image " << report.per_image_error.size() << "\n";
  for (std::size_t i = 0; i < report.per_image_error.size(); ++i)
    out << i << " " << detail::fmt_g9(report.per_image_error[i]) << "\n";
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace esr
