#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "xvloc/geomap.hpp"

namespace fixtures {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("xvloc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline xvloc::SemanticMap uniform_map(int cols, int rows, double res, xvloc::CellClass c,
                                      Eigen::Vector2d origin = Eigen::Vector2d::Zero()) {
  return xvloc::SemanticMap(xvloc::LabelRaster::Constant(rows, cols, static_cast<std::uint8_t>(c)), res, origin);
}

// Water map with Structure for every pixel whose x range starts at or beyond wall_x.
inline xvloc::SemanticMap wall_map(double width_m, double height_m, double res, double wall_x,
                                   Eigen::Vector2d origin = Eigen::Vector2d::Zero()) {
  const int cols = static_cast<int>(std::lround(width_m / res));
  const int rows = static_cast<int>(std::lround(height_m / res));
  xvloc::LabelRaster cells = xvloc::LabelRaster::Zero(rows, cols);
  for (int c = 0; c < cols; ++c) {
    if (origin.x() + c * res >= wall_x) cells.col(c).setConstant(1);
  }
  return xvloc::SemanticMap(std::move(cells), res, origin);
}

}  // namespace fixtures
