#include "xvloc/geomap.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "xvloc/errors.hpp"
#include "xvloc/image_io.hpp"

namespace xvloc {

SemanticMap::SemanticMap(LabelRaster cells, double resolution, const Eigen::Vector2d& origin)
    : resolution_(resolution), inv_resolution_(1.0 / resolution), origin_(origin) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ConfigError("map resolution must be positive and finite");
  }
  if (!origin.allFinite()) throw ConfigError("map origin must be finite");
  if (cells.rows() < 1 || cells.cols() < 1) throw ConfigError("map must have at least one pixel");
  for (Eigen::Index i = 0; i < cells.size(); ++i) {
    if (!is_valid_label(cells.data()[i])) {
      throw ConfigError("map pixel value " + std::to_string(cells.data()[i]) +
                        " is not one of {0, 1, 2, 255}");
    }
  }
  cells_ = std::make_shared<const LabelRaster>(std::move(cells));
}

double SemanticMap::class_fraction(CellClass c) const {
  const auto value = static_cast<std::uint8_t>(c);
  return static_cast<double>((cells_->array() == value).count()) / static_cast<double>(cells_->size());
}

void SonarFootprint::validate() const {
  if (!(max_range > 0.0) || !std::isfinite(max_range)) throw ConfigError("footprint max_range must be > 0");
  if (!(fov > 0.0 && fov < 2.0 * std::numbers::pi)) throw ConfigError("footprint fov must be in (0, 2pi)");
  if (range_bins < 1 || bearing_bins < 1) throw ConfigError("footprint bin counts must be >= 1");
}

void to_json(nlohmann::json& j, const SonarFootprint& fp) {
  j = nlohmann::json{{"max_range_m", fp.max_range},
                     {"fov_rad", fp.fov},
                     {"range_bins", fp.range_bins},
                     {"bearing_bins", fp.bearing_bins}};
}

void from_json(const nlohmann::json& j, SonarFootprint& fp) {
  fp = SonarFootprint{};
  fp.max_range = j.value("max_range_m", fp.max_range);
  fp.fov = j.value("fov_rad", fp.fov);
  fp.range_bins = j.value("range_bins", fp.range_bins);
  fp.bearing_bins = j.value("bearing_bins", fp.bearing_bins);
}

namespace {

// Walks every bin center of the fan; `visit(r, b, label)` returns false to stop.
template <typename Visitor>
void sample_fan(const SemanticMap& map, const Pose2d& pose, const SonarFootprint& fp, Visitor&& visit) {
  const LabelRaster& cells = map.cells();
  const double inv_res = 1.0 / map.resolution();
  const double ox = map.origin().x();
  const double oy = map.origin().y();
  const double w = map.width();
  const double h = map.height();
  const double range_step = fp.max_range / fp.range_bins;

  for (int b = 0; b < fp.bearing_bins; ++b) {
    const double angle = pose.theta + fp.bearing_of(b);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int r = 0; r < fp.range_bins; ++r) {
      const double range = (r + 0.5) * range_step;
      const double fx = std::floor((pose.x + range * c - ox) * inv_res);
      const double fy = std::floor((pose.y + range * s - oy) * inv_res);
      std::uint8_t label = static_cast<std::uint8_t>(CellClass::Unknown);
      if (fx >= 0.0 && fy >= 0.0 && fx < w && fy < h) {
        label = cells(static_cast<Eigen::Index>(fy), static_cast<Eigen::Index>(fx));
      }
      if (!visit(r, b, label)) return;
    }
  }
}

}  // namespace

CropImage crop_from_pose(const SemanticMap& map, const Pose2d& pose, const SonarFootprint& fp) {
  CropImage crop{LabelRaster(fp.range_bins, fp.bearing_bins), fp, pose};
  sample_fan(map, pose, fp, [&crop](int r, int b, std::uint8_t label) {
    crop.labels(r, b) = label;
    return true;
  });
  return crop;
}

PoseValidity pose_validity(const SemanticMap& map, const Pose2d& pose, const CropImage& crop) {
  PoseValidity v;
  const CellClass here = map.at_world(pose.position());
  v.out_of_map = !map.contains(pose.position());
  v.on_structure = here == CellClass::Structure;
  v.open_water = !(crop.labels == static_cast<std::uint8_t>(CellClass::Structure)).any();
  return v;
}

PoseValidity check_pose(const SemanticMap& map, const Pose2d& pose, const SonarFootprint& fp) {
  PoseValidity v;
  v.out_of_map = !map.contains(pose.position());
  v.on_structure = map.at_world(pose.position()) == CellClass::Structure;
  bool seen = false;
  sample_fan(map, pose, fp, [&seen](int, int, std::uint8_t label) {
    seen = label == static_cast<std::uint8_t>(CellClass::Structure);
    return !seen;
  });
  v.open_water = !seen;
  return v;
}

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

SemanticMap load_map(const std::filesystem::path& path) {
  std::filesystem::path image_path;
  std::filesystem::path sidecar_path;
  if (std::filesystem::is_directory(path)) {
    for (const char* name : {"map.pgm", "map.png"}) {
      if (std::filesystem::exists(path / name)) {
        image_path = path / name;
        break;
      }
    }
    if (image_path.empty()) throw IoError("no map.pgm or map.png in " + path.string());
    sidecar_path = path / "map.json";
  } else {
    image_path = path;
    sidecar_path = std::filesystem::path(path).replace_extension(".json");
  }

  const nlohmann::json meta = read_json_file(sidecar_path);
  double resolution = 0.0;
  Eigen::Vector2d origin;
  try {
    resolution = meta.at("resolution_m_per_px").get<double>();
    origin = {meta.at("origin_x_m").get<double>(), meta.at("origin_y_m").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("map sidecar " + sidecar_path.string() + ": " + e.what());
  }

  Gray8 image = read_gray8(image_path);
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    if (!is_valid_label(image.data()[i])) {
      throw IoError(image_path.string() + ": pixel value " + std::to_string(image.data()[i]) +
                    " is not a class label");
    }
  }
  return SemanticMap(std::move(image), resolution, origin);
}

void save_map(const SemanticMap& map, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_pgm(dir / "map.pgm", map.cells());
  std::ofstream out(dir / "map.json");
  if (!out) throw IoError("cannot write " + (dir / "map.json").string());
  const nlohmann::json meta{{"resolution_m_per_px", map.resolution()},
                            {"origin_x_m", map.origin().x()},
                            {"origin_y_m", map.origin().y()}};
  out << meta.dump(2) << '\n';
}

}  // namespace xvloc
