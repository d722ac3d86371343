#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "esr/error.hpp"
#include "esr/geometry.hpp"
#include "esr/image.hpp"
#include "esr/landmark_io.hpp"
#include "esr/pnm.hpp"

namespace esr {

struct DatasetEntry {
  std::string image_path;
  std::string landmark_path;
  std::optional<Box> box;
};

struct Dataset {
  std::vector<DatasetEntry> entries;
  std::vector<Image> images;
  std::vector<Shape> shapes;

  std::size_t size() const { return entries.size(); }
};

/// Loads every .pgm in dir with its sibling .pts landmark file, in
/// filename order. Landmark counts must be uniform.
inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError(dir + ": not a directory");

  std::vector<fs::path> pgms;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      pgms.push_back(entry.path());
  std::sort(pgms.begin(), pgms.end());
  if (pgms.empty()) throw DataError(dir + ": no .pgm images found");

  Dataset ds;
  for (const fs::path& img_path : pgms) {
    fs::path pts_path = img_path;
    pts_path.replace_extension(".pts");
    if (!fs::exists(pts_path))
      throw DataError(pts_path.string() + ": missing landmark file");
    LandmarkFile lf = load_landmarks(pts_path.string());
    if (!ds.shapes.empty() && lf.shape.n_landmarks() != ds.shapes.front().n_landmarks())
      throw DataError(pts_path.string() + ": landmark count differs from rest of dataset");
    ds.entries.push_back({img_path.string(), pts_path.string(), lf.box});
    ds.images.push_back(load_image(img_path.string()));
    ds.shapes.push_back(std::move(lf.shape));
  }
  return ds;
}

}  // namespace esr
