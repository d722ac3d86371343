#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "esr/cascade.hpp"
#include "esr/error.hpp"
#include "esr/textio.hpp"

namespace esr {

inline constexpr int kModelFormatVersion = 1;

/// Structured-text model document. Floats carry 17 significant digits so a
/// written model reloads to bit-identical binary64 values. Landmark and
/// pixel-column indices are 0-based.
inline void save_model(const ESRModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  const auto& p = model.params;

  out << "esr_model format_version " << kModelFormatVersion << "\n";
  out << "n_fp " << model.n_fp << "\n";
  out << "params n_aug " << p.n_aug << " t_stages " << p.t_stages << " k_ferns "
      << p.k_ferns << " p_pixels " << p.p_pixels << " f_features " << p.f_features
      << " kappa " << detail::fmt_g17(p.kappa) << " beta " << detail::fmt_g17(p.beta)
      << " seed " << p.seed << "\n";
  out << "mean_shape";
  for (double v : model.mean_shape.coords) out << " " << detail::fmt_g17(v);
  out << "\n";
  out << "stages " << model.stages.size() << "\n";
  for (std::size_t t = 0; t < model.stages.size(); ++t) {
    const StageRegressor& stage = model.stages[t];
    out << "stage " << t << "\n";
    out << "local_coords " << stage.local_coords.size() << "\n";
    for (const LocalCoordinate& c : stage.local_coords)
      out << c.landmark << " " << detail::fmt_g17(c.dx) << " " << detail::fmt_g17(c.dy)
          << "\n";
    out << "ferns " << stage.ferns.size() << "\n";
    for (std::size_t k = 0; k < stage.ferns.size(); ++k) {
      const Fern& fern = stage.ferns[k];
      out << "fern " << k << "\n";
      out << "pairs";
      for (const FeaturePair& pr : fern.pairs) out << " " << pr.m << " " << pr.n;
      out << "\n";
      out << "thresholds";
      for (double th : fern.thresholds) out << " " << detail::fmt_g17(th);
      out << "\n";
      out << "bin_outputs " << fern.bin_outputs.size() << "\n";
      for (const auto& bin : fern.bin_outputs) {
        bool first = true;
        for (double v : bin) {
          out << (first ? "" : " ") << detail::fmt_g17(v);
          first = false;
        }
        out << "\n";
      }
    }
  }
  out << "end\n";
  if (!out) throw DataError(path + ": write failed");
}

inline ESRModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  detail::TokenReader r(in, path);

  ESRModel model;
  r.expect("esr_model");
  r.expect("format_version");
  model.format_version = int(r.next_int());
  if (model.format_version != kModelFormatVersion)
    throw DataError(path + ": unsupported model format_version " +
                    std::to_string(model.format_version));

  r.expect("n_fp");
  model.n_fp = std::size_t(r.next_count("n_fp", 2, 100000));

  auto& p = model.params;
  r.expect("params");
  r.expect("n_aug");
  p.n_aug = std::size_t(r.next_count("n_aug", 1, 1000000));
  r.expect("t_stages");
  p.t_stages = std::size_t(r.next_count("t_stages", 0, 1000000));
  r.expect("k_ferns");
  p.k_ferns = std::size_t(r.next_count("k_ferns", 1, 1000000));
  r.expect("p_pixels");
  p.p_pixels = std::size_t(r.next_count("p_pixels", 2, 1000000));
  r.expect("f_features");
  p.f_features = std::size_t(r.next_count("f_features", 1, 16));
  r.expect("kappa");
  p.kappa = r.next_double();
  r.expect("beta");
  p.beta = r.next_double();
  r.expect("seed");
  p.seed = std::uint64_t(r.next_int());
  p.validate();

  r.expect("mean_shape");
  model.mean_shape.coords.resize(2 * model.n_fp);
  for (auto& v : model.mean_shape.coords) v = r.next_double();
  if (!model.mean_shape.is_finite()) throw DataError(path + ": non-finite mean shape");

  r.expect("stages");
  const long long n_stages = r.next_count("stage count", 0, 1000000);
  if (std::size_t(n_stages) != p.t_stages)
    throw DataError(path + ": stage count disagrees with t_stages echo");

  const std::size_t n_bins = std::size_t(1) << p.f_features;
  for (long long t = 0; t < n_stages; ++t) {
    r.expect("stage");
    if (r.next_int() != t) throw DataError(path + ": stage index out of order");
    StageRegressor stage;

    r.expect("local_coords");
    const long long n_coords = r.next_count("local_coords count", 1, 10000000);
    if (std::size_t(n_coords) != p.p_pixels)
      throw DataError(path + ": local_coords count disagrees with p_pixels echo");
    stage.local_coords.resize(std::size_t(n_coords));
    for (auto& c : stage.local_coords) {
      c.landmark = std::size_t(r.next_count("landmark index", 0, static_cast<long long>(model.n_fp) - 1));
      c.dx = r.next_double();
      c.dy = r.next_double();
      if (!std::isfinite(c.dx) || !std::isfinite(c.dy))
        throw DataError(path + ": non-finite local coordinate");
    }

    r.expect("ferns");
    const long long n_ferns = r.next_count("fern count", 0, static_cast<long long>(p.k_ferns));
    for (long long k = 0; k < n_ferns; ++k) {
      r.expect("fern");
      if (r.next_int() != k) throw DataError(path + ": fern index out of order");
      Fern fern;
      r.expect("pairs");
      fern.pairs.resize(p.f_features);
      for (auto& pr : fern.pairs) {
        pr.m = std::size_t(r.next_count("pair index", 0, static_cast<long long>(p.p_pixels) - 1));
        pr.n = std::size_t(r.next_count("pair index", 0, static_cast<long long>(p.p_pixels) - 1));
      }
      r.expect("thresholds");
      fern.thresholds.resize(p.f_features);
      for (auto& th : fern.thresholds) {
        th = r.next_double();
        if (!std::isfinite(th)) throw DataError(path + ": non-finite threshold");
      }
      r.expect("bin_outputs");
      const long long bins = r.next_int();
      if (std::size_t(bins) != n_bins)
        throw DataError(path + ": bin count disagrees with 2^f_features");
      fern.bin_outputs.assign(n_bins, std::vector<double>(2 * model.n_fp));
      for (auto& bin : fern.bin_outputs)
        for (auto& v : bin) {
          v = r.next_double();
          if (!std::isfinite(v)) throw DataError(path + ": non-finite bin output");
        }
      stage.ferns.push_back(std::move(fern));
    }
    model.stages.push_back(std::move(stage));
  }
  r.expect("end");
  if (!r.at_eof()) throw DataError(path + ": trailing content after model document");
  return model;
}

}  // namespace esr
