#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <numbers>
#include <optional>

#include <Eigen/Core>
#include <json.hpp>

#include "xvloc/geometry.hpp"

namespace xvloc {

enum class CellClass : std::uint8_t { Water = 0, Structure = 1, Movable = 2, Unknown = 255 };

constexpr bool is_valid_label(std::uint8_t value) {
  return value == 0 || value == 1 || value == 2 || value == 255;
}

/// Row-major raster of CellClass values.
using LabelRaster = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PixelIndex {
  int col = 0;  // x
  int row = 0;  // y
  bool operator==(const PixelIndex&) const = default;
};

/// Semantic aerial map. Pixel (col, row) covers
/// [origin.x + col * res, origin.x + (col + 1) * res) x [origin.y + row * res, ...),
/// so rows grow with world +y. Immutable; copies share the raster.
class SemanticMap {
 public:
  /// Throws ConfigError on non-positive resolution, empty raster or labels
  /// outside {0, 1, 2, 255}.
  SemanticMap(LabelRaster cells, double resolution, const Eigen::Vector2d& origin);

  int width() const { return static_cast<int>(cells_->cols()); }
  int height() const { return static_cast<int>(cells_->rows()); }
  double resolution() const { return resolution_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  const LabelRaster& cells() const { return *cells_; }

  double width_m() const { return width() * resolution_; }
  double height_m() const { return height() * resolution_; }

  std::optional<PixelIndex> world_to_pixel(const Eigen::Vector2d& p) const {
    const double fx = std::floor((p.x() - origin_.x()) * inv_resolution_);
    const double fy = std::floor((p.y() - origin_.y()) * inv_resolution_);
    if (!(fx >= 0.0 && fy >= 0.0 && fx < width() && fy < height())) return std::nullopt;
    return PixelIndex{static_cast<int>(fx), static_cast<int>(fy)};
  }

  /// Center of the pixel.
  Eigen::Vector2d pixel_to_world(const PixelIndex& px) const {
    return origin_ + resolution_ * Eigen::Vector2d(px.col + 0.5, px.row + 0.5);
  }

  bool contains(const Eigen::Vector2d& p) const { return world_to_pixel(p).has_value(); }

  CellClass at(const PixelIndex& px) const {
    return static_cast<CellClass>((*cells_)(px.row, px.col));
  }

  /// Class at a world point; Unknown off-map.
  CellClass at_world(const Eigen::Vector2d& p) const {
    const auto px = world_to_pixel(p);
    return px ? at(*px) : CellClass::Unknown;
  }

  /// Fraction of cells with the given class.
  double class_fraction(CellClass c) const;

 private:
  std::shared_ptr<const LabelRaster> cells_;
  double resolution_;
  double inv_resolution_;
  Eigen::Vector2d origin_;
};

/// Fan geometry shared by acoustic images and map crops.
/// Rows are range bins (near to far), columns are bearing bins ascending from -fov/2.
struct SonarFootprint {
  double max_range = 30.0;
  double fov = std::numbers::pi / 2.0;
  int range_bins = 128;
  int bearing_bins = 256;

  /// Throws ConfigError.
  void validate() const;

  double range_of(double range_bin) const { return (range_bin + 0.5) / range_bins * max_range; }
  double bearing_of(double bearing_bin) const {
    return -0.5 * fov + (bearing_bin + 0.5) / bearing_bins * fov;
  }
  /// Fractional bin coordinates of a range / bearing (inverse of the above).
  double range_bin_of(double range) const { return range / max_range * range_bins - 0.5; }
  double bearing_bin_of(double bearing) const { return (bearing + 0.5 * fov) / fov * bearing_bins - 0.5; }

  /// Sensor-frame point (x forward, y left) at fractional bin coordinates.
  Eigen::Vector2d sensor_point(double range_bin, double bearing_bin) const {
    const double r = range_of(range_bin);
    const double b = bearing_of(bearing_bin);
    return {r * std::cos(b), r * std::sin(b)};
  }

  bool operator==(const SonarFootprint&) const = default;
};

void to_json(nlohmann::json& j, const SonarFootprint& fp);
void from_json(const nlohmann::json& j, SonarFootprint& fp);

struct CropImage {
  LabelRaster labels;  // range_bins x bearing_bins
  SonarFootprint footprint;
  Pose2d pose;
};

struct PoseValidity {
  bool on_structure = false;
  bool out_of_map = false;
  bool open_water = false;

  bool valid() const { return !on_structure && !out_of_map && !open_water; }
};

/// Samples the map at every (range, bearing) bin center of the fan placed at `pose`.
/// Nearest-neighbour lookup; off-map samples are Unknown.
CropImage crop_from_pose(const SemanticMap& map, const Pose2d& pose, const SonarFootprint& fp);

PoseValidity pose_validity(const SemanticMap& map, const Pose2d& pose, const CropImage& crop);

/// Same flags as pose_validity(map, pose, crop_from_pose(map, pose, fp)) but
/// stops sampling at the first Structure cell.
PoseValidity check_pose(const SemanticMap& map, const Pose2d& pose, const SonarFootprint& fp);

/// Loads a map from a directory holding map.pgm or map.png plus map.json, or
/// from an image path whose sidecar shares its stem. Throws IoError / ConfigError.
SemanticMap load_map(const std::filesystem::path& path);

/// Writes <dir>/map.pgm and <dir>/map.json.
void save_map(const SemanticMap& map, const std::filesystem::path& dir);

}  // namespace xvloc
