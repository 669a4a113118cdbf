#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "xvloc/geomap.hpp"
#include "xvloc/geometry.hpp"
#include "xvloc/matcher.hpp"
#include "xvloc/random.hpp"
#include "xvloc/sonar.hpp"

namespace xvloc {

struct Particle {
  Pose2d pose;
  double weight = 0.0;
};

struct Belief {
  std::vector<Particle> particles;
  double timestamp = 0.0;
  Rng rng;

  Eigen::VectorXd weights() const;
};

/// Body-frame forward speed plus the compass heading it was measured under.
struct ControlInput {
  double v_x = 0.0;      // m/s
  double heading = 0.0;  // rad, world frame
  double dt = 0.0;       // s, > 0
};

/// The init, resample and bad-particle sigmas apply as meters to x, y and
/// as radians to theta.
struct FilterConfig {
  int particle_count = 120;
  double sigma_init = 0.5;
  double sigma_resample = 0.15;
  double sigma_bad = 15.0;
  int max_redraws = 10;
  double info_threshold = 0.02;
  double sigma_velocity = 1.0;  // m/s per control step, transition noise
  double sigma_heading = 0.05;  // rad, transition noise
  SonarFootprint footprint;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const FilterConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, FilterConfig& cfg);

/// K particles drawn i.i.d. from a Gaussian around `mean`; uniform weights.
Belief init_belief(const Pose2d& mean, const FilterConfig& cfg, double timestamp = 0.0);

/// Constant-velocity transition: each particle draws a noisy speed and compass
/// heading, moves v * dt along it and takes that heading.
void predict(Belief& belief, const ControlInput& u, const FilterConfig& cfg);

/// Observation update. Non-informative frames leave the belief untouched and
/// return false; otherwise every particle's weight is replaced by its
/// normalized match score and true is returned.
bool update(Belief& belief, const AcousticImage& acoustic, const SemanticMap& map, const Scorer& scorer,
            const FilterConfig& cfg);

/// Index of the first cumulative weight strictly greater than `u`.
std::size_t roulette_select(std::span<const double> cumulative, double u);

/// Roulette-wheel resampling with Gaussian jitter, followed by bad-particle
/// re-draws (open water, on structure, off map) at sigma_bad and a uniform
/// in-map fallback after max_redraws failures. Leaves uniform weights.
void resample(Belief& belief, const SemanticMap& map, const FilterConfig& cfg);

struct PoseEstimate {
  Pose2d pose;
  double spread = 0.0;  // weighted RMS distance to the mean position, meters
};

/// Weighted mean position, weighted circular mean heading.
PoseEstimate estimate(const Belief& belief);

}  // namespace xvloc
