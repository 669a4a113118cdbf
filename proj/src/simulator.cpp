#include "xvloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "xvloc/errors.hpp"
#include "xvloc/image_io.hpp"
#include "xvloc/random.hpp"

namespace xvloc {

void WorldSpec::validate() const {
  auto fail = [](const std::string& what) { throw InvalidSpec("world spec: " + what); };
  if (!(width_m > 0.0 && height_m > 0.0)) fail("map dimensions must be positive");
  if (!(resolution > 0.0)) fail("resolution must be positive");
  if (shoreline_width_m < 0.0) fail("shoreline width must be >= 0");
  const double inner = std::min(width_m, height_m) - 2.0 * shoreline_width_m;
  if (!(inner > 0.0)) fail("shoreline band leaves no water");
  if (pier_count < 0 || movable_count < 0) fail("counts must be >= 0");
  if (pier_count > 0) {
    if (!(pier_length_min_m > 0.0 && pier_length_min_m <= pier_length_max_m)) fail("bad pier length range");
    if (!(pier_width_min_m > 0.0 && pier_width_min_m <= pier_width_max_m)) fail("bad pier width range");
    if (pier_length_max_m >= inner) fail("piers would reach the opposite shore");
    if (pier_width_max_m >= inner) fail("piers are wider than the basin");
  }
  if (pier_count > 0 && pier_edges.empty()) fail("pier_edges must name at least one edge");
  for (const auto& edge : pier_edges) {
    if (edge != "south" && edge != "north" && edge != "west" && edge != "east") fail("unknown pier edge '" + edge + "'");
  }
  if (movable_count > 0 && pier_count == 0) fail("boats are moored at piers; movable_count needs pier_count > 0");
}

void to_json(nlohmann::json& j, const WorldSpec& s) {
  j = nlohmann::json{{"width_m", s.width_m},
                     {"height_m", s.height_m},
                     {"resolution_m_per_px", s.resolution},
                     {"shoreline_width_m", s.shoreline_width_m},
                     {"pier_count", s.pier_count},
                     {"pier_length_min_m", s.pier_length_min_m},
                     {"pier_length_max_m", s.pier_length_max_m},
                     {"pier_width_min_m", s.pier_width_min_m},
                     {"pier_width_max_m", s.pier_width_max_m},
                     {"movable_count", s.movable_count},
                     {"pier_edges", s.pier_edges},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, WorldSpec& s) {
  s = WorldSpec{};
  s.width_m = j.value("width_m", s.width_m);
  s.height_m = j.value("height_m", s.height_m);
  s.resolution = j.value("resolution_m_per_px", s.resolution);
  s.shoreline_width_m = j.value("shoreline_width_m", s.shoreline_width_m);
  s.pier_count = j.value("pier_count", s.pier_count);
  s.pier_length_min_m = j.value("pier_length_min_m", s.pier_length_min_m);
  s.pier_length_max_m = j.value("pier_length_max_m", s.pier_length_max_m);
  s.pier_width_min_m = j.value("pier_width_min_m", s.pier_width_min_m);
  s.pier_width_max_m = j.value("pier_width_max_m", s.pier_width_max_m);
  s.movable_count = j.value("movable_count", s.movable_count);
  s.pier_edges = j.value("pier_edges", s.pier_edges);
  s.seed = j.value("seed", s.seed);
}

namespace {

// Paints every pixel whose center lies inside `box`; `only_over` restricts
// painting to cells currently holding that class.
void paint(LabelRaster& cells, double resolution, const Box& box, CellClass value,
           std::optional<CellClass> only_over = std::nullopt) {
  const int c0 = std::max(0, static_cast<int>(std::ceil(box.min.x() / resolution - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(box.min.y() / resolution - 0.5)));
  const int c1 = std::min(static_cast<int>(cells.cols()), static_cast<int>(std::ceil(box.max.x() / resolution - 0.5)));
  const int r1 = std::min(static_cast<int>(cells.rows()), static_cast<int>(std::ceil(box.max.y() / resolution - 0.5)));
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      if (only_over && cells(r, c) != static_cast<std::uint8_t>(*only_over)) continue;
      cells(r, c) = static_cast<std::uint8_t>(value);
    }
  }
}

}  // namespace

Marina generate_marina(const WorldSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x57041D));
  const int cols = std::max(1, static_cast<int>(std::lround(spec.width_m / spec.resolution)));
  const int rows = std::max(1, static_cast<int>(std::lround(spec.height_m / spec.resolution)));
  const double w = cols * spec.resolution;
  const double h = rows * spec.resolution;
  const double band = spec.shoreline_width_m;
  LabelRaster cells = LabelRaster::Constant(rows, cols, static_cast<std::uint8_t>(CellClass::Water));

  if (band > 0.0) {
    paint(cells, spec.resolution, {{0, 0}, {w, band}}, CellClass::Structure);
    paint(cells, spec.resolution, {{0, h - band}, {w, h}}, CellClass::Structure);
    paint(cells, spec.resolution, {{0, 0}, {band, h}}, CellClass::Structure);
    paint(cells, spec.resolution, {{w - band, 0}, {w, h}}, CellClass::Structure);
  }

  std::vector<Box> piers;
  for (int i = 0; i < spec.pier_count; ++i) {
    const std::string& name = spec.pier_edges[rng.uniform_index(spec.pier_edges.size())];
    const int edge = name == "south" ? 0 : name == "north" ? 1 : name == "west" ? 2 : 3;
    const double length = rng.uniform(spec.pier_length_min_m, spec.pier_length_max_m);
    const double width = rng.uniform(spec.pier_width_min_m, spec.pier_width_max_m);
    const bool vertical = edge < 2;  // south / north piers run along y
    const double span = vertical ? w : h;
    const double lo = band + 0.5 * width;
    const double center = rng.uniform(lo, std::max(lo, span - lo));
    Box box;
    if (vertical) {
      const double y0 = edge == 0 ? 0.0 : h - band - length;
      const double y1 = edge == 0 ? band + length : h;
      box = {{center - 0.5 * width, y0}, {center + 0.5 * width, y1}};
    } else {
      const double x0 = edge == 2 ? 0.0 : w - band - length;
      const double x1 = edge == 2 ? band + length : w;
      box = {{x0, center - 0.5 * width}, {x1, center + 0.5 * width}};
    }
    paint(cells, spec.resolution, box, CellClass::Structure);
    piers.push_back(box);
  }

  std::vector<Box> boats;
  constexpr double kBoatLength = 8.0;
  constexpr double kBoatBeam = 3.0;
  constexpr double kGap = 1.0;
  for (int i = 0; i < spec.movable_count; ++i) {
    const Box& pier = piers[rng.uniform_index(piers.size())];
    const Eigen::Vector2d extent = pier.max - pier.min;
    const bool along_y = extent.y() >= extent.x();
    const bool positive_side = rng.uniform() < 0.5;
    const double axis_lo = along_y ? pier.min.y() : pier.min.x();
    const double axis_hi = along_y ? pier.max.y() : pier.max.x();
    const double start = rng.uniform(axis_lo, std::max(axis_lo, axis_hi - kBoatLength));
    Box boat;
    if (along_y) {
      const double x0 = positive_side ? pier.max.x() + kGap : pier.min.x() - kGap - kBoatBeam;
      boat = {{x0, start}, {x0 + kBoatBeam, start + kBoatLength}};
    } else {
      const double y0 = positive_side ? pier.max.y() + kGap : pier.min.y() - kGap - kBoatBeam;
      boat = {{start, y0}, {start + kBoatLength, y0 + kBoatBeam}};
    }
    paint(cells, spec.resolution, boat, CellClass::Movable, CellClass::Water);
    boats.push_back(boat);
  }

  return Marina{SemanticMap(std::move(cells), spec.resolution, Eigen::Vector2d::Zero()), std::move(piers),
                std::move(boats)};
}

SemanticMap generate_world(const WorldSpec& spec) { return generate_marina(spec).map; }

void NoiseSpec::validate() const {
  for (double v : {odom_velocity_std, compass_std, sonar_intensity_std}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("noise standard deviations must be finite and >= 0");
  }
  if (!std::isfinite(odom_velocity_bias)) throw ConfigError("odometry bias must be finite");
  if (!(sonar_dropout >= 0.0 && sonar_dropout <= 1.0)) throw ConfigError("sonar dropout must be in [0, 1]");
}

void to_json(nlohmann::json& j, const NoiseSpec& n) {
  j = nlohmann::json{{"odom_velocity_bias", n.odom_velocity_bias},
                     {"odom_velocity_std", n.odom_velocity_std},
                     {"compass_std", n.compass_std},
                     {"sonar_intensity_std", n.sonar_intensity_std},
                     {"sonar_dropout", n.sonar_dropout}};
}

void from_json(const nlohmann::json& j, NoiseSpec& n) {
  n = NoiseSpec{};
  n.odom_velocity_bias = j.value("odom_velocity_bias", n.odom_velocity_bias);
  n.odom_velocity_std = j.value("odom_velocity_std", n.odom_velocity_std);
  n.compass_std = j.value("compass_std", n.compass_std);
  n.sonar_intensity_std = j.value("sonar_intensity_std", n.sonar_intensity_std);
  n.sonar_dropout = j.value("sonar_dropout", n.sonar_dropout);
}

namespace {

bool reflects(std::uint8_t label) {
  return label == static_cast<std::uint8_t>(CellClass::Structure) ||
         label == static_cast<std::uint8_t>(CellClass::Movable);
}

// Grid traversal (Amanatides-Woo) from `start` along unit `dir`; distance in
// meters to the boundary of the first reflecting cell, if any within max_range.
std::optional<double> first_hit(const SemanticMap& map, const Eigen::Vector2d& start, const Eigen::Vector2d& dir,
                                double max_range) {
  const double res = map.resolution();
  const Eigen::Vector2d g = (start - map.origin()) / res;
  const double w = map.width();
  const double h = map.height();

  // Clip the ray to the raster box.
  double t0 = 0.0;
  double t1 = max_range / res;
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = 0.0;
    const double hi = axis == 0 ? w : h;
    if (dir(axis) == 0.0) {
      if (g(axis) < lo || g(axis) >= hi) return std::nullopt;
      continue;
    }
    double a = (lo - g(axis)) / dir(axis);
    double b = (hi - g(axis)) / dir(axis);
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (!(t0 < t1)) return std::nullopt;

  const Eigen::Vector2d entry = g + t0 * dir;
  int ix = std::clamp(static_cast<int>(std::floor(entry.x())), 0, static_cast<int>(w) - 1);
  int iy = std::clamp(static_cast<int>(std::floor(entry.y())), 0, static_cast<int>(h) - 1);
  const int step_x = dir.x() > 0.0 ? 1 : -1;
  const int step_y = dir.y() > 0.0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  double next_x = dir.x() != 0.0 ? (ix + (step_x > 0 ? 1 : 0) - g.x()) / dir.x() : inf;
  double next_y = dir.y() != 0.0 ? (iy + (step_y > 0 ? 1 : 0) - g.y()) / dir.y() : inf;
  const double delta_x = dir.x() != 0.0 ? std::abs(1.0 / dir.x()) : inf;
  const double delta_y = dir.y() != 0.0 ? std::abs(1.0 / dir.y()) : inf;

  const LabelRaster& cells = map.cells();
  double t = t0;
  while (t < t1) {
    if (reflects(cells(iy, ix))) return t * res;
    if (next_x < next_y) {
      t = next_x;
      next_x += delta_x;
      ix += step_x;
      if (ix < 0 || ix >= w) break;
    } else {
      t = next_y;
      next_y += delta_y;
      iy += step_y;
      if (iy < 0 || iy >= h) break;
    }
  }
  return std::nullopt;
}

}  // namespace

AcousticImage render_sonar(const SemanticMap& map, const Pose2d& true_pose, const SonarFootprint& fp,
                           const NoiseSpec& noise, std::uint64_t seed, const SonarModel& model) {
  fp.validate();
  AcousticImage img(fp, 0.0);
  img.true_pose = true_pose;

  const double bin = fp.max_range / fp.range_bins;
  const int smear_bins = std::max(0, static_cast<int>(std::lround(model.smear_m / bin)));
  Rng rng(seed);

  for (int b = 0; b < fp.bearing_bins; ++b) {
    const double angle = true_pose.theta + fp.bearing_of(b);
    const auto distance = first_hit(map, true_pose.position(), {std::cos(angle), std::sin(angle)}, fp.max_range);
    if (!distance) continue;
    const int hit = std::min(fp.range_bins - 1, static_cast<int>(std::floor(*distance / bin)));
    const double base = std::max(0.1, 1.0 - model.attenuation_per_m * fp.range_of(hit));
    for (int i = 0; i <= smear_bins && hit + i < fp.range_bins; ++i) {
      double value = base * (1.0 - 0.5 * i / (smear_bins + 1.0));
      value += rng.normal(0.0, noise.sonar_intensity_std);
      if (noise.sonar_dropout > 0.0 && rng.uniform() < noise.sonar_dropout) value = 0.0;
      img.intensity(hit + i, b) = static_cast<float>(std::clamp(value, 0.0, 1.0));
    }
  }
  return img;
}

void RunSpec::validate() const {
  if (waypoints.size() < 2) throw ConfigError("a run needs at least two waypoints");
  if (!(speed > 0.0 && speed <= 0.6)) throw ConfigError("speed must be in (0, 0.6] m/s");
  if (!(control_rate_hz > 0.0)) throw ConfigError("control rate must be positive");
  if (!(sonar_period_s > 0.0)) throw ConfigError("sonar period must be positive");
  footprint.validate();
}

void to_json(nlohmann::json& j, const RunSpec& s) {
  nlohmann::json wps = nlohmann::json::array();
  for (const auto& p : s.waypoints) wps.push_back({p.x(), p.y()});
  j = nlohmann::json{{"waypoints", wps},
                     {"speed", s.speed},
                     {"control_rate_hz", s.control_rate_hz},
                     {"sonar_period_s", s.sonar_period_s},
                     {"footprint", s.footprint},
                     {"sonar_attenuation_per_m", s.sonar.attenuation_per_m},
                     {"sonar_smear_m", s.sonar.smear_m}};
}

void from_json(const nlohmann::json& j, RunSpec& s) {
  s = RunSpec{};
  for (const auto& p : j.at("waypoints")) s.waypoints.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  s.speed = j.value("speed", s.speed);
  s.control_rate_hz = j.value("control_rate_hz", s.control_rate_hz);
  s.sonar_period_s = j.value("sonar_period_s", s.sonar_period_s);
  if (j.contains("footprint")) s.footprint = j.at("footprint").get<SonarFootprint>();
  s.sonar.attenuation_per_m = j.value("sonar_attenuation_per_m", s.sonar.attenuation_per_m);
  s.sonar.smear_m = j.value("sonar_smear_m", s.sonar.smear_m);
}

namespace {

// 8-bit quantization, so in-memory frames equal their PGM round trip.
void quantize(AcousticImage& img) { img.intensity = (img.intensity * 255.0f).round() / 255.0f; }

}  // namespace

SimulatedRun simulate_run(const SemanticMap& world, const RunSpec& spec, const NoiseSpec& noise, std::uint64_t seed) {
  spec.validate();
  noise.validate();
  for (std::size_t i = 0; i < spec.waypoints.size(); ++i) {
    const auto& wp = spec.waypoints[i];
    if (!world.contains(wp) || world.at_world(wp) == CellClass::Structure) {
      throw InvalidTrajectory(fmt::format("waypoint {} ({}, {}) is not on water inside the map", i, wp.x(), wp.y()));
    }
  }

  Rng odom_rng(mix_seed(seed, 1));
  Rng compass_rng(mix_seed(seed, 2));
  const long sonar_every = std::max(1L, std::lround(spec.sonar_period_s * spec.control_rate_hz));

  SimulatedRun run;
  Eigen::Vector2d position = spec.waypoints.front();
  std::size_t target = 1;
  const Eigen::Vector2d first_leg = spec.waypoints[1] - position;
  Pose2d pose(position.x(), position.y(), std::atan2(first_leg.y(), first_leg.x()));

  auto emit_sonar = [&](long tick, double t) {
    const std::string name = fmt::format("frames/{:06d}.pgm", tick / sonar_every);
    AcousticImage frame = render_sonar(world, pose, spec.footprint, noise,
                                       mix_seed(seed, 1000 + static_cast<std::uint64_t>(tick)), spec.sonar);
    frame.timestamp = t;
    quantize(frame);
    run.frames.emplace(name, std::move(frame));
    run.log.records.emplace_back(SonarRecord{t, name});
  };

  run.log.records.emplace_back(GroundTruthRecord{0.0, pose});
  emit_sonar(0, 0.0);

  double t_prev = 0.0;
  for (long tick = 1; target < spec.waypoints.size(); ++tick) {
    const double t = static_cast<double>(tick) / spec.control_rate_hz;
    const double dt = t - t_prev;
    t_prev = t;

    const Eigen::Vector2d to_target = spec.waypoints[target] - Eigen::Vector2d(pose.x, pose.y);
    const double distance = to_target.norm();
    const double heading = distance > 0.0 ? std::atan2(to_target.y(), to_target.x()) : pose.theta;
    double v = spec.speed;
    if (distance <= spec.speed * dt) {
      v = distance / dt;
      ++target;
    }
    pose = Pose2d(pose.x + v * dt * std::cos(heading), pose.y + v * dt * std::sin(heading), heading);

    const double measured_heading = wrap_angle(compass_rng.normal(heading, noise.compass_std));
    const double measured_v = odom_rng.normal(v + noise.odom_velocity_bias, noise.odom_velocity_std);
    run.log.records.emplace_back(CompassRecord{t, measured_heading});
    run.log.records.emplace_back(OdomRecord{t, measured_v});
    run.log.records.emplace_back(GroundTruthRecord{t, pose});
    if (tick % sonar_every == 0) emit_sonar(tick, t);
  }
  return run;
}

void save_run(const SimulatedRun& run, const std::filesystem::path& dir) {
  write_log(run.log, log_file_in(dir));
  for (const auto& [name, frame] : run.frames) write_pgm(dir / name, acoustic_to_gray8(frame));
}

namespace {

template <typename Fn>
void for_each_batch(const MessageLog& log, Fn&& fn) {
  std::size_t i = 0;
  while (i < log.records.size()) {
    std::size_t j = i;
    const double t = record_time(log.records[i]);
    while (j < log.records.size() && record_time(log.records[j]) == t) ++j;
    fn(t, std::span<const LogRecord>(log.records.data() + i, j - i));
    i = j;
  }
}

}  // namespace

std::vector<TimedPose> dead_reckoning(const MessageLog& log) {
  const auto first_gt = std::find_if(log.records.begin(), log.records.end(), [](const LogRecord& r) {
    return std::holds_alternative<GroundTruthRecord>(r);
  });
  if (first_gt == log.records.end()) throw EmptyLog("dead reckoning needs a ground-truth starting pose");
  const bool has_odom = std::any_of(log.records.begin(), log.records.end(),
                                    [](const LogRecord& r) { return std::holds_alternative<OdomRecord>(r); });
  const bool has_compass = std::any_of(log.records.begin(), log.records.end(),
                                       [](const LogRecord& r) { return std::holds_alternative<CompassRecord>(r); });
  if (!has_odom || !has_compass) throw EmptyLog("dead reckoning needs odometry and compass records");

  const auto& start = std::get<GroundTruthRecord>(*first_gt);
  std::vector<TimedPose> trajectory{{start.t, start.pose}};
  Pose2d pose = start.pose;
  double last_t = start.t;
  std::optional<double> heading;

  for_each_batch(log, [&](double t, std::span<const LogRecord> batch) {
    if (t < start.t) return;
    for (const auto& r : batch) {
      if (const auto* c = std::get_if<CompassRecord>(&r)) heading = c->heading;
    }
    for (const auto& r : batch) {
      const auto* odom = std::get_if<OdomRecord>(&r);
      if (!odom || !heading || !(t > last_t)) continue;
      const double dt = t - last_t;
      pose = Pose2d(pose.x + odom->v_x * dt * std::cos(*heading), pose.y + odom->v_x * dt * std::sin(*heading),
                    *heading);
      last_t = t;
      trajectory.push_back({t, pose});
    }
  });
  return trajectory;
}

Pose2d pose_at(const std::vector<TimedPose>& trajectory, double t) {
  if (trajectory.empty()) throw EmptyLog("empty trajectory");
  const auto it = std::upper_bound(trajectory.begin(), trajectory.end(), t,
                                   [](double value, const TimedPose& p) { return value < p.t; });
  if (it == trajectory.begin()) return trajectory.front().pose;
  return std::prev(it)->pose;
}

}  // namespace xvloc
