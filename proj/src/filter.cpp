#include "xvloc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <set>
#include <string>

#include "xvloc/errors.hpp"

namespace xvloc {

Eigen::VectorXd Belief::weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(particles.size()));
  for (std::size_t k = 0; k < particles.size(); ++k) w(static_cast<Eigen::Index>(k)) = particles[k].weight;
  return w;
}

void FilterConfig::validate() const {
  if (particle_count < 1) throw ConfigError("particle_count must be >= 1");
  for (const auto& [name, sigma] : {std::pair{"sigma_init", sigma_init},
                                    std::pair{"sigma_resample", sigma_resample},
                                    std::pair{"sigma_bad", sigma_bad},
                                    std::pair{"sigma_velocity", sigma_velocity},
                                    std::pair{"sigma_heading", sigma_heading}}) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError(std::string(name) + " must be finite and >= 0");
  }
  if (max_redraws < 0) throw ConfigError("max_redraws must be >= 0");
  if (!(info_threshold >= 0.0 && info_threshold <= 1.0)) throw ConfigError("info_threshold must be in [0, 1]");
  footprint.validate();
}

void to_json(nlohmann::json& j, const FilterConfig& cfg) {
  j = nlohmann::json{{"particle_count", cfg.particle_count},
                     {"sigma_init", cfg.sigma_init},
                     {"sigma_resample", cfg.sigma_resample},
                     {"sigma_bad", cfg.sigma_bad},
                     {"max_redraws", cfg.max_redraws},
                     {"info_threshold", cfg.info_threshold},
                     {"sigma_velocity", cfg.sigma_velocity},
                     {"sigma_heading", cfg.sigma_heading},
                     {"footprint", cfg.footprint},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, FilterConfig& cfg) {
  static const std::set<std::string> known = {"particle_count", "sigma_init",   "sigma_resample",
                                              "sigma_bad",      "max_redraws",  "info_threshold",
                                              "sigma_velocity", "sigma_heading", "footprint",
                                              "seed"};
  if (!j.is_object()) throw ConfigError("filter config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) throw ConfigError("unknown filter config key '" + item.key() + "'");
  }
  try {
    cfg = FilterConfig{};
    cfg.particle_count = j.value("particle_count", cfg.particle_count);
    cfg.sigma_init = j.value("sigma_init", cfg.sigma_init);
    cfg.sigma_resample = j.value("sigma_resample", cfg.sigma_resample);
    cfg.sigma_bad = j.value("sigma_bad", cfg.sigma_bad);
    cfg.max_redraws = j.value("max_redraws", cfg.max_redraws);
    cfg.info_threshold = j.value("info_threshold", cfg.info_threshold);
    cfg.sigma_velocity = j.value("sigma_velocity", cfg.sigma_velocity);
    cfg.sigma_heading = j.value("sigma_heading", cfg.sigma_heading);
    if (j.contains("footprint")) cfg.footprint = j.at("footprint").get<SonarFootprint>();
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("filter config: ") + e.what());
  }
  cfg.validate();
}

namespace {

Pose2d jitter(Rng& rng, const Pose2d& center, double sigma) {
  return Pose2d(rng.normal(center.x, sigma), rng.normal(center.y, sigma), rng.normal(center.theta, sigma));
}

void set_uniform_weights(Belief& belief) {
  const double w = 1.0 / static_cast<double>(belief.particles.size());
  for (auto& p : belief.particles) p.weight = w;
}

Pose2d uniform_free_pose(Rng& rng, const SemanticMap& map) {
  const double x0 = map.origin().x();
  const double y0 = map.origin().y();
  constexpr int kAttempts = 1000;
  Pose2d candidate;
  for (int i = 0; i < kAttempts; ++i) {
    candidate = Pose2d(rng.uniform(x0, x0 + map.width_m()), rng.uniform(y0, y0 + map.height_m()),
                       rng.uniform(-std::numbers::pi, std::numbers::pi));
    if (map.contains(candidate.position()) && map.at_world(candidate.position()) != CellClass::Structure) {
      return candidate;
    }
  }
  // Nearly all-structure map: pick among the free pixels directly.
  std::vector<PixelIndex> free;
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      if (map.at({col, row}) != CellClass::Structure) free.push_back({col, row});
    }
  }
  if (free.empty()) return candidate;
  const Eigen::Vector2d p = map.pixel_to_world(free[rng.uniform_index(free.size())]);
  return Pose2d(p.x(), p.y(), candidate.theta);
}

}  // namespace

Belief init_belief(const Pose2d& mean, const FilterConfig& cfg, double timestamp) {
  cfg.validate();
  Belief belief{{}, timestamp, Rng(cfg.seed)};
  belief.particles.reserve(static_cast<std::size_t>(cfg.particle_count));
  for (int k = 0; k < cfg.particle_count; ++k) {
    belief.particles.push_back({jitter(belief.rng, mean, cfg.sigma_init), 0.0});
  }
  set_uniform_weights(belief);
  return belief;
}

void predict(Belief& belief, const ControlInput& u, const FilterConfig& cfg) {
  if (!(u.dt > 0.0) || !std::isfinite(u.dt) || !std::isfinite(u.v_x) || !std::isfinite(u.heading)) {
    throw ConfigError("control input needs finite values and dt > 0");
  }
  for (auto& particle : belief.particles) {
    const double v = belief.rng.normal(u.v_x, cfg.sigma_velocity);
    const double heading = belief.rng.normal(u.heading, cfg.sigma_heading);
    particle.pose = Pose2d(particle.pose.x + v * u.dt * std::cos(heading),
                           particle.pose.y + v * u.dt * std::sin(heading), heading);
  }
  belief.timestamp += u.dt;
}

bool update(Belief& belief, const AcousticImage& acoustic, const SemanticMap& map, const Scorer& scorer,
            const FilterConfig& cfg) {
  if (!(acoustic.footprint == cfg.footprint)) {
    throw DimensionMismatch("acoustic frame footprint differs from the filter footprint");
  }
  if (!is_informative(acoustic, cfg.info_threshold)) return false;

  const auto count = static_cast<Eigen::Index>(belief.particles.size());
  Eigen::VectorXd distances(count);
  std::vector<std::exception_ptr> failures(belief.particles.size());

  // Per-particle work is independent; results land at their own index.
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < count; ++k) {
    try {
      const CropImage crop = crop_from_pose(map, belief.particles[k].pose, cfg.footprint);
      distances(k) = scorer.score(acoustic, crop).value();
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  const Eigen::VectorXd scores = normalize_scores(distances);
  for (Eigen::Index k = 0; k < count; ++k) belief.particles[k].weight = scores(k);
  return true;
}

std::size_t roulette_select(std::span<const double> cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) {
    // u at or past the total (rounding); take the last particle with weight.
    std::size_t k = cumulative.size() - 1;
    while (k > 0 && cumulative[k] == cumulative[k - 1]) --k;
    return k;
  }
  return static_cast<std::size_t>(it - cumulative.begin());
}

void resample(Belief& belief, const SemanticMap& map, const FilterConfig& cfg) {
  const std::size_t count = belief.particles.size();
  std::vector<double> cumulative(count);
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    total += belief.particles[k].weight;
    cumulative[k] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw Error("cannot resample a belief without positive weight");

  auto draw_parent = [&]() -> const Pose2d& {
    return belief.particles[roulette_select(cumulative, belief.rng.uniform() * total)].pose;
  };

  std::vector<Particle> children;
  children.reserve(count);
  for (std::size_t k = 0; k < count; ++k) children.push_back({jitter(belief.rng, draw_parent(), cfg.sigma_resample), 0.0});

  for (auto& child : children) {
    if (check_pose(map, child.pose, cfg.footprint).valid()) continue;
    bool recovered = false;
    for (int attempt = 0; attempt < cfg.max_redraws && !recovered; ++attempt) {
      child.pose = jitter(belief.rng, draw_parent(), cfg.sigma_bad);
      recovered = check_pose(map, child.pose, cfg.footprint).valid();
    }
    if (!recovered) child.pose = uniform_free_pose(belief.rng, map);
  }

  belief.particles = std::move(children);
  set_uniform_weights(belief);
}

PoseEstimate estimate(const Belief& belief) {
  double total = 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double sin_sum = 0.0;
  double cos_sum = 0.0;
  for (const auto& p : belief.particles) {
    total += p.weight;
    mean += p.weight * p.pose.position();
    sin_sum += p.weight * std::sin(p.pose.theta);
    cos_sum += p.weight * std::cos(p.pose.theta);
  }
  if (!(total > 0.0)) throw Error("cannot estimate from a belief without positive weight");
  mean /= total;

  double spread = 0.0;
  for (const auto& p : belief.particles) spread += p.weight * (p.pose.position() - mean).squaredNorm();
  return {Pose2d(mean.x(), mean.y(), std::atan2(sin_sum, cos_sum)), std::sqrt(spread / total)};
}

}  // namespace xvloc
