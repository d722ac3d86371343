#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "esr/error.hpp"
#include "esr/features.hpp"
#include "esr/fern.hpp"
#include "esr/geometry.hpp"
#include "esr/image.hpp"
#include "esr/selection.hpp"

namespace esr {

struct TrainParams {
  std::size_t n_aug = 20;
  std::size_t t_stages = 10;
  std::size_t k_ferns = 500;
  std::size_t p_pixels = 400;
  std::size_t f_features = 5;
  double kappa = 0.3;
  double beta = 1000.0;
  std::uint64_t seed = 7;

  void validate() const {
    if (n_aug < 1) throw UsageError("n_aug must be >= 1");
    if (k_ferns < 1) throw UsageError("k_ferns must be >= 1");
    if (p_pixels < 2) throw UsageError("p_pixels must be >= 2");
    if (f_features < 1 || f_features > 16)
      throw UsageError("f_features must be in [1, 16]");
    if (!(kappa > 0.0)) throw UsageError("kappa must be > 0");
    if (!(beta >= 0.0)) throw UsageError("beta must be >= 0");
  }
};

struct TestParams {
  std::size_t n_init = 5;

  void validate() const {
    if (n_init < 1) throw UsageError("n_init must be >= 1");
  }
};

/// Exemplar shapes used to seed the cascade at train and test time.
struct InitSet {
  std::vector<Shape> exemplars;
};

/// One external-level regressor: P sampling locations shared by K ferns.
/// A degenerate stage (zero residuals at training) carries no ferns.
struct StageRegressor {
  std::vector<LocalCoordinate> local_coords;
  std::vector<Fern> ferns;
};

struct ESRModel {
  int format_version = 1;
  std::size_t n_fp = 0;
  Shape mean_shape;
  TrainParams params;  // training configuration echo
  std::vector<StageRegressor> stages;
};

struct LabeledImage {
  const Image* image = nullptr;
  Shape groundtruth;
};

struct InitItem {
  const Image* image = nullptr;
  std::optional<Shape> groundtruth;
  Box box;
};

struct InitializedSample {
  const Image* image = nullptr;
  std::optional<Shape> groundtruth;
  Shape initial;
};

/// Scales an exemplar uniformly to fit the box (aspect preserved) and
/// centers it there.
inline Shape place_in_box(const Shape& exemplar, const Box& box) {
  const Box bb = bounding_box(exemplar);
  double s = 1.0;
  if (bb.w > 0.0 && bb.h > 0.0)
    s = std::min(box.w / bb.w, box.h / bb.h);
  else if (bb.w > 0.0)
    s = box.w / bb.w;
  else if (bb.h > 0.0)
    s = box.h / bb.h;
  if (!(s > 0.0)) s = 1.0;
  const double ex = bb.x + bb.w / 2, ey = bb.y + bb.h / 2;
  const double cx = box.x + box.w / 2, cy = box.y + box.h / 2;
  // Identity placement stays exact (no round-trip through the arithmetic),
  // so an exemplar dropped into its own box reproduces itself bit for bit.
  if (s == 1.0 && cx == ex && cy == ey) return exemplar;
  Shape out(exemplar.n_landmarks());
  for (std::size_t i = 0; i < out.n_landmarks(); ++i)
    out.set_point(i, {s * (exemplar.x(i) - ex) + cx, s * (exemplar.y(i) - ey) + cy});
  return out;
}

/// Replicates each item d times, drawing initial shapes from the InitSet:
/// without replacement per item when the set is large enough, with
/// replacement otherwise. Each drawn exemplar is placed into the item's box.
inline std::vector<InitializedSample> initialize(std::span<const InitItem> items,
                                                 std::size_t d, const InitSet& init_set,
                                                 Rng& rng) {
  if (d < 1) throw UsageError("initialize: replication count must be >= 1");
  if (init_set.exemplars.empty()) throw UsageError("initialize: empty InitSet");
  const std::size_t e = init_set.exemplars.size();

  std::vector<InitializedSample> out;
  out.reserve(items.size() * d);
  std::vector<std::size_t> idx(e);
  for (const InitItem& item : items) {
    if (e >= d) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t j = 0; j < d; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, e - 1);
        std::swap(idx[j], idx[pick(rng)]);
        out.push_back({item.image, item.groundtruth,
                       place_in_box(init_set.exemplars[idx[j]], item.box)});
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, e - 1);
      for (std::size_t j = 0; j < d; ++j)
        out.push_back({item.image, item.groundtruth,
                       place_in_box(init_set.exemplars[pick(rng)], item.box)});
    }
  }
  return out;
}

namespace detail {

inline bool all_zero(std::span<const std::vector<double>> y) {
  for (const auto& row : y)
    for (double v : row)
      if (v != 0.0) return false;
  return true;
}

inline double sum_squared(std::span<const std::vector<double>> y) {
  double s = 0;
  for (const auto& row : y)
    for (double v : row) s += v * v;
  return s;
}

}  // namespace detail

/// Learns one stage: generates fresh sampling locations, extracts pixels
/// once, precomputes the pixel covariance once, then fits K ferns on the
/// running residuals. Exactly-zero residuals short-circuit to a fern-less
/// stage. sse_trace, when given, receives the residual sum of squares
/// before any fern and after each one.
inline StageRegressor learn_stage_regressor(std::vector<std::vector<double>> y,
                                            std::span<const SampleRef> data,
                                            const Shape& mean, const TrainParams& params,
                                            Rng& rng,
                                            std::vector<double>* sse_trace = nullptr) {
  params.validate();
  if (y.size() != data.size())
    throw UsageError("learn_stage_regressor: target/sample count mismatch");

  StageRegressor stage;
  stage.local_coords =
      generate_local_coordinates(mean.n_landmarks(), params.p_pixels, params.kappa, rng);
  if (detail::all_zero(y)) return stage;

  const PixelFeatureMatrix rho =
      extract_shape_indexed_pixels(data, stage.local_coords, mean);
  const CovarianceCache cache = precompute_pixel_covariance(rho);
  const std::size_t n = y.size();
  const std::size_t n_bins = std::size_t(1) << params.f_features;

  if (sse_trace) sse_trace->push_back(detail::sum_squared(y));
  std::vector<double> fvals(params.f_features);
  for (std::size_t k = 0; k < params.k_ferns; ++k) {
    if (detail::all_zero(y)) break;

    Fern fern;
    fern.pairs = select_features(y, rho, cache, params.f_features, rng);

    // Threshold range c: the largest absolute value any selected
    // difference feature takes over the training samples.
    double c = 0;
    for (const FeaturePair& pr : fern.pairs)
      for (std::size_t i = 0; i < n; ++i)
        c = std::max(c, std::abs(rho.at(i, pr.m) - rho.at(i, pr.n)));
    fern.thresholds = sample_thresholds(c, params.f_features, rng);

    std::vector<std::size_t> assignments(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < params.f_features; ++f)
        fvals[f] = rho.at(i, fern.pairs[f].m) - rho.at(i, fern.pairs[f].n);
      assignments[i] = bin_index(fvals, fern.thresholds);
    }
    fern.bin_outputs = compute_bin_outputs(y, assignments, n_bins, params.beta);

    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double>& out = fern.bin_outputs[assignments[i]];
      for (std::size_t j = 0; j < out.size(); ++j) y[i][j] -= out[j];
    }
    stage.ferns.push_back(std::move(fern));
    if (sse_trace) sse_trace->push_back(detail::sum_squared(y));
  }
  return stage;
}

/// Shape increment (normalized frame) predicted by one stage: the sum of
/// all fern outputs for this sample's pixel features.
inline Shape apply_stage_regressor(const Image& image, const Shape& shape,
                                   const StageRegressor& stage, const Shape& mean) {
  const std::vector<double> row =
      extract_pixels_single(image, shape, stage.local_coords, mean);
  Shape delta(mean.n_landmarks());
  std::vector<double> fvals;
  for (const Fern& fern : stage.ferns) {
    fvals.resize(fern.pairs.size());
    for (std::size_t f = 0; f < fern.pairs.size(); ++f)
      fvals[f] = row[fern.pairs[f].m] - row[fern.pairs[f].n];
    const std::vector<double>& out = apply_fern(fern, fvals);
    for (std::size_t j = 0; j < delta.coords.size(); ++j) delta.coords[j] += out[j];
  }
  return delta;
}

/// One cascade step: predict a normalized-frame increment and carry it
/// back through the inverse of the shape's normalizing transform. Train
/// and test both advance shapes through this exact path.
inline Shape cascade_step(const Image& image, const Shape& shape,
                          const StageRegressor& stage, const Shape& mean) {
  const SimilarityTransform to_mean = align_similarity(shape, mean);
  const Shape delta = apply_stage_regressor(image, shape, stage, mean);
  const Shape back = apply_linear(invert_transform(to_mean), delta);
  Shape out = shape;
  for (std::size_t j = 0; j < out.coords.size(); ++j) out.coords[j] += back.coords[j];
  return out;
}

/// Per-coordinate median; the lower median for even counts.
inline Shape combine_multiple_results(std::span<const Shape> shapes) {
  if (shapes.empty()) throw UsageError("combine_multiple_results: empty shape list");
  const std::size_t dim = shapes[0].coords.size();
  for (const Shape& s : shapes)
    if (s.coords.size() != dim)
      throw UsageError("combine_multiple_results: inconsistent landmark counts");
  Shape out;
  out.coords.resize(dim);
  std::vector<double> vals(shapes.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < shapes.size(); ++i) vals[i] = shapes[i].coords[j];
    const std::size_t mid = (vals.size() - 1) / 2;
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    out.coords[j] = vals[mid];
  }
  return out;
}

/// Progress and diagnostics hooks for train(). Mean alignment error here
/// is ||S - groundtruth||_2 / n_fp averaged over the augmented samples.
struct TrainTrace {
  bool keep_shapes = false;
  double initial_error = 0.0;
  std::vector<double> stage_errors;
  std::vector<Shape> initial_shapes;
  std::vector<std::vector<Shape>> shapes_after_stage;
  std::vector<std::vector<double>> fern_sse;
  std::function<void(double mean_error)> on_init;
  std::function<void(std::size_t stage, double mean_error)> on_stage;
};

namespace detail {

inline double mean_alignment_error(std::span<const InitializedSample> samples,
                                   std::span<const Shape> current) {
  double acc = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double ss = 0;
    const Shape& gt = *samples[i].groundtruth;
    for (std::size_t j = 0; j < gt.coords.size(); ++j) {
      const double d = current[i].coords[j] - gt.coords[j];
      ss += d * d;
    }
    acc += std::sqrt(ss) / double(gt.n_landmarks());
  }
  return acc / double(samples.size());
}

}  // namespace detail

inline ESRModel train(std::span<const LabeledImage> labeled, const TrainParams& params,
                      const InitSet& init_set, TrainTrace* trace = nullptr) {
  params.validate();
  if (labeled.empty()) throw UsageError("train: no labeled samples");
  const std::size_t n_fp = labeled[0].groundtruth.n_landmarks();
  if (n_fp < 2) throw UsageError("train: shapes need at least 2 landmarks");
  for (const LabeledImage& l : labeled) {
    if (!l.image) throw UsageError("train: null image");
    if (l.groundtruth.n_landmarks() != n_fp)
      throw UsageError("train: inconsistent landmark counts");
    if (!l.groundtruth.is_finite()) throw DataError("train: non-finite groundtruth");
  }

  Rng rng(params.seed);

  std::vector<Shape> gts;
  gts.reserve(labeled.size());
  for (const LabeledImage& l : labeled) gts.push_back(l.groundtruth);

  ESRModel model;
  model.n_fp = n_fp;
  model.params = params;
  model.mean_shape = compute_mean_shape(gts);

  std::vector<InitItem> items;
  items.reserve(labeled.size());
  for (const LabeledImage& l : labeled)
    items.push_back({l.image, l.groundtruth, bounding_box(l.groundtruth)});
  const std::vector<InitializedSample> samples =
      initialize(items, params.n_aug, init_set, rng);

  std::vector<Shape> current;
  current.reserve(samples.size());
  for (const InitializedSample& s : samples) current.push_back(s.initial);

  if (trace) {
    trace->initial_error = detail::mean_alignment_error(samples, current);
    if (trace->keep_shapes) trace->initial_shapes = current;
    if (trace->on_init) trace->on_init(trace->initial_error);
  }

  std::vector<SampleRef> refs(samples.size());
  std::vector<std::vector<double>> y(samples.size());
  for (std::size_t t = 0; t < params.t_stages; ++t) {
    for (std::size_t i = 0; i < samples.size(); ++i)
      y[i] = normalize_target(*samples[i].groundtruth, current[i], model.mean_shape).coords;
    for (std::size_t i = 0; i < samples.size(); ++i)
      refs[i] = {samples[i].image, &current[i]};

    std::vector<double> sse;
    StageRegressor stage = learn_stage_regressor(y, refs, model.mean_shape, params, rng,
                                                 trace ? &sse : nullptr);
    for (std::size_t i = 0; i < samples.size(); ++i)
      current[i] = cascade_step(*samples[i].image, current[i], stage, model.mean_shape);
    model.stages.push_back(std::move(stage));

    if (trace) {
      const double err = detail::mean_alignment_error(samples, current);
      trace->stage_errors.push_back(err);
      trace->fern_sse.push_back(std::move(sse));
      if (trace->keep_shapes) trace->shapes_after_stage.push_back(current);
      if (trace->on_stage) trace->on_stage(t, err);
    }
  }
  return model;
}

/// Runs the cascade from n_init initial shapes drawn from the InitSet and
/// combines the endpoints coordinate-wise by median. The box positions the
/// initial shapes; absent, the whole image is used.
inline Shape predict(const ESRModel& model, const Image& image, const TestParams& tp,
                     const InitSet& init_set, Rng& rng,
                     std::optional<Box> box = std::nullopt) {
  tp.validate();
  if (model.n_fp < 2) throw UsageError("predict: model has no landmarks");
  for (const Shape& e : init_set.exemplars)
    if (e.n_landmarks() != model.n_fp)
      throw UsageError("predict: InitSet not conformable with model");

  const Box b = box.value_or(Box{0.0, 0.0, double(image.width - 1), double(image.height - 1)});
  const InitItem item{&image, std::nullopt, b};
  const std::vector<InitializedSample> inits =
      initialize(std::span<const InitItem>(&item, 1), tp.n_init, init_set, rng);

  std::vector<Shape> results;
  results.reserve(inits.size());
  for (const InitializedSample& s : inits) {
    Shape shape = s.initial;
    for (const StageRegressor& stage : model.stages)
      shape = cascade_step(image, shape, stage, model.mean_shape);
    results.push_back(std::move(shape));
  }
  return combine_multiple_results(results);
}

}  // namespace esr
