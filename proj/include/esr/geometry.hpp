#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "esr/error.hpp"

namespace esr {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle in pixel coordinates.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

/// A landmark shape: n interleaved (x, y) coordinates in image pixels.
struct Shape {
  std::vector<double> coords;

  Shape() = default;
  explicit Shape(std::size_t n_landmarks) : coords(2 * n_landmarks, 0.0) {}
  explicit Shape(std::vector<double> c) : coords(std::move(c)) {}

  std::size_t n_landmarks() const { return coords.size() / 2; }

  double x(std::size_t i) const { return coords[2 * i]; }
  double y(std::size_t i) const { return coords[2 * i + 1]; }

  Point point(std::size_t i) const {
    if (i >= n_landmarks()) throw std::out_of_range("landmark index out of range");
    return {coords[2 * i], coords[2 * i + 1]};
  }
  void set_point(std::size_t i, Point p) {
    coords[2 * i] = p.x;
    coords[2 * i + 1] = p.y;
  }

  bool is_finite() const {
    for (double v : coords)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline Box bounding_box(const Shape& s) {
  double x0 = s.x(0), x1 = s.x(0), y0 = s.y(0), y1 = s.y(0);
  for (std::size_t i = 1; i < s.n_landmarks(); ++i) {
    x0 = std::min(x0, s.x(i));
    x1 = std::max(x1, s.x(i));
    y0 = std::min(y0, s.y(i));
    y1 = std::max(y1, s.y(i));
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Similarity map p -> A p + t with A = [[a, -b], [b, a]].
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point operator()(Point p) const {
    return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
  }
  /// Linear part only; used on coordinate differences, where the
  /// translation cancels.
  Point linear(Point p) const { return {a * p.x - b * p.y, b * p.x + a * p.y}; }
};

inline Shape apply_transform(const SimilarityTransform& m, const Shape& s) {
  Shape out(s.n_landmarks());
  for (std::size_t i = 0; i < s.n_landmarks(); ++i) out.set_point(i, m({s.x(i), s.y(i)}));
  return out;
}

/// Applies only the rotation/scale part of m to a coordinate-difference
/// vector (stored in Shape layout).
inline Shape apply_linear(const SimilarityTransform& m, const Shape& diff) {
  Shape out(diff.n_landmarks());
  for (std::size_t i = 0; i < diff.n_landmarks(); ++i)
    out.set_point(i, m.linear({diff.x(i), diff.y(i)}));
  return out;
}

inline SimilarityTransform invert_transform(const SimilarityTransform& m) {
  const double d = m.a * m.a + m.b * m.b;
  if (!(d > 0.0)) throw DegenerateError("cannot invert degenerate similarity transform");
  SimilarityTransform inv;
  inv.a = m.a / d;
  inv.b = -m.b / d;
  inv.tx = -(inv.a * m.tx - inv.b * m.ty);
  inv.ty = -(inv.b * m.tx + inv.a * m.ty);
  return inv;
}

/// compose(m2, m1) applies m1 first, then m2.
inline SimilarityTransform compose(const SimilarityTransform& m2,
                                   const SimilarityTransform& m1) {
  SimilarityTransform c;
  c.a = m2.a * m1.a - m2.b * m1.b;
  c.b = m2.b * m1.a + m2.a * m1.b;
  c.tx = m2.a * m1.tx - m2.b * m1.ty + m2.tx;
  c.ty = m2.b * m1.tx + m2.a * m1.ty + m2.ty;
  return c;
}

/// Least-squares similarity transform M minimizing ||dst - M(src)||.
///
/// Closed form from centered coordinates: with both shapes centered on
/// their centroids, a is the normalized dot product and b the normalized
/// cross product of the coordinate vectors.
inline SimilarityTransform align_similarity(const Shape& src, const Shape& dst) {
  const std::size_t n = src.n_landmarks();
  if (n < 2 || n != dst.n_landmarks())
    throw UsageError("align_similarity: shapes must share n_landmarks >= 2");

  double sx = 0, sy = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += src.x(i);
    sy += src.y(i);
    dx += dst.x(i);
    dy += dst.y(i);
  }
  sx /= double(n);
  sy /= double(n);
  dx /= double(n);
  dy /= double(n);

  double dot = 0, cross = 0, norm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ux = src.x(i) - sx, uy = src.y(i) - sy;
    const double vx = dst.x(i) - dx, vy = dst.y(i) - dy;
    dot += ux * vx + uy * vy;
    cross += ux * vy - uy * vx;
    norm += ux * ux + uy * uy;
  }
  if (!(norm > 0.0))
    throw DegenerateError("align_similarity: source landmarks are all coincident");

  SimilarityTransform m;
  m.a = dot / norm;
  m.b = cross / norm;
  m.tx = dx - (m.a * sx - m.b * sy);
  m.ty = dy - (m.b * sx + m.a * sy);
  return m;
}

/// Translates the centroid to the origin and scales so the RMS landmark
/// distance from the centroid is 1.
inline Shape canonicalize(const Shape& s) {
  const std::size_t n = s.n_landmarks();
  double cx = 0, cy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cx += s.x(i);
    cy += s.y(i);
  }
  cx /= double(n);
  cy /= double(n);
  double ms = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ux = s.x(i) - cx, uy = s.y(i) - cy;
    ms += ux * ux + uy * uy;
  }
  const double rms = std::sqrt(ms / double(n));
  if (!(rms > 0.0)) throw DegenerateError("canonicalize: shape has zero extent");
  Shape out(n);
  for (std::size_t i = 0; i < n; ++i)
    out.set_point(i, {(s.x(i) - cx) / rms, (s.y(i) - cy) / rms});
  return out;
}

/// Generalized Procrustes mean. Iteratively aligns every shape to the
/// current mean, averages, and re-centers/re-scales the average to the
/// canonical frame (centroid 0, unit RMS). Deterministic given input order.
inline Shape compute_mean_shape(std::span<const Shape> shapes,
                                double tol = 1e-8, int max_iters = 100) {
  if (shapes.empty()) throw UsageError("compute_mean_shape: empty shape list");
  const std::size_t n = shapes[0].n_landmarks();
  for (const Shape& s : shapes)
    if (s.n_landmarks() != n)
      throw UsageError("compute_mean_shape: inconsistent landmark counts");

  Shape mean = canonicalize(shapes[0]);
  for (int iter = 0; iter < max_iters; ++iter) {
    Shape acc(n);
    for (const Shape& s : shapes) {
      const Shape aligned = apply_transform(align_similarity(s, mean), s);
      for (std::size_t j = 0; j < 2 * n; ++j) acc.coords[j] += aligned.coords[j];
    }
    for (std::size_t j = 0; j < 2 * n; ++j) acc.coords[j] /= double(shapes.size());
    const Shape next = canonicalize(acc);
    double delta = 0;
    for (std::size_t j = 0; j < 2 * n; ++j)
      delta = std::max(delta, std::abs(next.coords[j] - mean.coords[j]));
    mean = next;
    if (delta < tol) break;
  }
  return mean;
}

/// Regression target in the normalized frame: the rotation/scale part of
/// the transform aligning s_prev to the mean shape, applied to the
/// difference (s_hat - s_prev). The translation is dropped because it
/// cancels in coordinate differences.
inline Shape normalize_target(const Shape& s_hat, const Shape& s_prev,
                              const Shape& mean) {
  const SimilarityTransform m = align_similarity(s_prev, mean);
  Shape diff(s_hat.n_landmarks());
  for (std::size_t j = 0; j < diff.coords.size(); ++j)
    diff.coords[j] = s_hat.coords[j] - s_prev.coords[j];
  return apply_linear(m, diff);
}

}  // namespace esr
