#pragma once

#include <fstream>
#include <optional>
#include <string>

#include "esr/error.hpp"
#include "esr/geometry.hpp"
#include "esr/textio.hpp"

namespace esr {

struct LandmarkFile {
  Shape shape;
  std::optional<Box> box;
};

/// Landmark file format:
///
///   version 1
///   n_points N
///   x y          (N lines)
///   box x y w h  (optional)
inline LandmarkFile load_landmarks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  detail::TokenReader r(in, path);

  r.expect("version");
  const long long version = r.next_int();
  if (version != 1)
    throw DataError(path + ": unsupported landmark file version " + std::to_string(version));
  r.expect("n_points");
  const long long n = r.next_count("n_points", 1, 100000);

  LandmarkFile out;
  out.shape.coords.resize(2 * std::size_t(n));
  for (long long i = 0; i < 2 * n; ++i) out.shape.coords[i] = r.next_double();
  if (!out.shape.is_finite()) throw DataError(path + ": non-finite landmark coordinates");

  if (!r.at_eof()) {
    r.expect("box");
    Box b;
    b.x = r.next_double();
    b.y = r.next_double();
    b.w = r.next_double();
    b.h = r.next_double();
    out.box = b;
    if (!r.at_eof()) throw DataError(path + ": trailing content after box line");
  }
  return out;
}

inline void save_landmarks(const LandmarkFile& lf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << "version 1\n";
  out << "n_points " << lf.shape.n_landmarks() << "\n";
  for (std::size_t i = 0; i < lf.shape.n_landmarks(); ++i)
    out << detail::fmt_g9(lf.shape.x(i)) << " " << detail::fmt_g9(lf.shape.y(i)) << "\n";
  if (lf.box)
    out << "box " << detail::fmt_g9(lf.box->x) << " " << detail::fmt_g9(lf.box->y) << " "
        << detail::fmt_g9(lf.box->w) << " " << detail::fmt_g9(lf.box->h) << "\n";
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace esr
