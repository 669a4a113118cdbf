#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "xvloc/geomap.hpp"
#include "xvloc/message_log.hpp"
#include "xvloc/sonar.hpp"

namespace xvloc {

/// Synthetic marina: a structure band along every map edge (the stone
/// shoreline), rectangular piers attached to it, and boats moored beside piers.
struct WorldSpec {
  double width_m = 160.0;
  double height_m = 120.0;
  double resolution = 0.5;
  double shoreline_width_m = 4.0;
  int pier_count = 3;
  double pier_length_min_m = 20.0;
  double pier_length_max_m = 40.0;
  double pier_width_min_m = 2.0;
  double pier_width_max_m = 4.0;
  int movable_count = 2;
  /// Shore edges piers may attach to: "south" (y = 0), "north", "west" (x = 0), "east".
  std::vector<std::string> pier_edges = {"south", "north", "west", "east"};
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
};

void to_json(nlohmann::json& j, const WorldSpec& spec);
void from_json(const nlohmann::json& j, WorldSpec& spec);

/// Axis-aligned rectangle in world meters.
struct Box {
  Eigen::Vector2d min;
  Eigen::Vector2d max;
  bool contains(const Eigen::Vector2d& p) const {
    return (p.array() >= min.array()).all() && (p.array() < max.array()).all();
  }
};

struct Marina {
  SemanticMap map;
  std::vector<Box> piers;
  std::vector<Box> boats;
};

/// World plus the geometry it was painted from.
Marina generate_marina(const WorldSpec& spec);
SemanticMap generate_world(const WorldSpec& spec);

struct NoiseSpec {
  double odom_velocity_bias = 0.0;   // m/s
  double odom_velocity_std = 0.0;    // m/s
  double compass_std = 0.0;          // rad
  double sonar_intensity_std = 0.0;  // added to echo pixels
  double sonar_dropout = 0.0;        // per-pixel probability

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const NoiseSpec& noise);
void from_json(const nlohmann::json& j, NoiseSpec& noise);

/// Single-bounce echo model.
struct SonarModel {
  double attenuation_per_m = 0.01;  // echo intensity lost per meter of range
  double smear_m = 3.0;             // trailing echo length behind the first hit
};

/// Casts one ray per bearing-bin center through the map grid. The first
/// Structure or Movable cell echoes in the range bin holding its entry distance;
/// everything behind the smear is shadowed.
AcousticImage render_sonar(const SemanticMap& map, const Pose2d& true_pose, const SonarFootprint& fp,
                           const NoiseSpec& noise, std::uint64_t seed, const SonarModel& model = {});

struct RunSpec {
  std::vector<Eigen::Vector2d> waypoints;  // first entry is the start position
  double speed = 0.5;                      // m/s, at most 0.6
  double control_rate_hz = 10.0;           // odometry, compass and ground truth
  double sonar_period_s = 4.0;
  SonarFootprint footprint;
  SonarModel sonar;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const RunSpec& spec);
void from_json(const nlohmann::json& j, RunSpec& spec);

struct SimulatedRun {
  MessageLog log;
  std::map<std::string, AcousticImage> frames;  // keyed by the sonar records' frame path
};

/// Drives the vehicle through the waypoints at constant speed. At each control
/// tick the vehicle steers straight at the current waypoint and advances
/// speed * dt (less on the tick that reaches it), so integrating noiseless
/// odometry and compass reproduces the ground truth exactly.
/// Throws InvalidTrajectory when a waypoint is not on water inside the map.
SimulatedRun simulate_run(const SemanticMap& world, const RunSpec& spec, const NoiseSpec& noise, std::uint64_t seed);

/// Writes log.jsonl and the frames under `dir`.
void save_run(const SimulatedRun& run, const std::filesystem::path& dir);

struct TimedPose {
  double t = 0.0;
  Pose2d pose;
};

/// Integrates odometry and the latest compass heading from the first ground-truth
/// pose; one entry per odometry record plus the starting pose.
/// Throws EmptyLog when there is no odometry, compass or starting pose.
std::vector<TimedPose> dead_reckoning(const MessageLog& log);

/// Dead-reckoned pose at time t (last integrated pose with time <= t).
Pose2d pose_at(const std::vector<TimedPose>& trajectory, double t);

}  // namespace xvloc
