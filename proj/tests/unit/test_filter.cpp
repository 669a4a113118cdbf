#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "support/fixtures.hpp"
#include "xvloc/errors.hpp"
#include "xvloc/filter.hpp"
#include "xvloc/simulator.hpp"

using namespace xvloc;
constexpr double kPi = std::numbers::pi;

namespace {

FilterConfig quiet(int k = 120) {
  FilterConfig cfg;
  cfg.particle_count = k;
  cfg.sigma_init = 0.0;
  cfg.sigma_resample = 0.0;
  cfg.sigma_velocity = 0.0;
  cfg.sigma_heading = 0.0;
  return cfg;
}

// Basin with a wall along x >= 60 m.
SemanticMap basin() { return fixtures::wall_map(100.0, 60.0, 0.5, 60.0); }

}  // namespace

TEST_CASE("config defaults and validation") {
  const FilterConfig cfg;
  CHECK(cfg.particle_count == 120);
  CHECK(cfg.sigma_init == 0.5);
  CHECK(cfg.sigma_resample == 0.15);
  CHECK(cfg.sigma_bad == 15.0);
  CHECK(cfg.max_redraws == 10);
  CHECK(cfg.info_threshold == 0.02);
  CHECK_NOTHROW(cfg.validate());
  FilterConfig bad = cfg;
  bad.particle_count = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.sigma_bad = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.info_threshold = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config JSON") {
  FilterConfig cfg;
  cfg.particle_count = 7;
  cfg.seed = 99;
  cfg.footprint.range_bins = 64;
  const nlohmann::json j = cfg;
  const FilterConfig back = j.get<FilterConfig>();
  CHECK(back.particle_count == 7);
  CHECK(back.seed == 99);
  CHECK(back.footprint == cfg.footprint);
  CHECK(nlohmann::json::parse("{}").get<FilterConfig>().particle_count == 120);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"particles": 3})").get<FilterConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"particle_count": "x"})").get<FilterConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"particle_count": -2})").get<FilterConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json::parse("[1]").get<FilterConfig>(), ConfigError);
}

TEST_CASE("init with zero sigma puts every particle at the mean") {
  const Belief b = init_belief(Pose2d(1, 2, 0.3), quiet(), 5.0);
  CHECK(b.particles.size() == 120);
  CHECK(b.timestamp == 5.0);
  for (const auto& p : b.particles) {
    CHECK(p.pose == Pose2d(1, 2, 0.3));
    CHECK(p.weight == doctest::Approx(1.0 / 120));
  }
}

TEST_CASE("init sample mean is within the Monte Carlo bound") {
  FilterConfig cfg;
  cfg.particle_count = 10000;
  cfg.seed = 4;
  const Belief b = init_belief(Pose2d(10, -3, 0.2), cfg);
  double mx = 0, my = 0, mt = 0;
  for (const auto& p : b.particles) {
    mx += p.pose.x;
    my += p.pose.y;
    mt += p.pose.theta;
  }
  const double bound = 3 * cfg.sigma_init / std::sqrt(10000.0);
  CHECK(std::abs(mx / 10000 - 10) < bound);
  CHECK(std::abs(my / 10000 + 3) < bound);
  CHECK(std::abs(mt / 10000 - 0.2) < bound);
  CHECK(std::abs(b.weights().sum() - 1.0) < 1e-9);
}

TEST_CASE("init is deterministic given the seed") {
  FilterConfig cfg;
  cfg.seed = 8;
  const Belief a = init_belief(Pose2d(), cfg);
  const Belief b = init_belief(Pose2d(), cfg);
  for (std::size_t k = 0; k < a.particles.size(); ++k) CHECK(a.particles[k].pose == b.particles[k].pose);
}

TEST_CASE("noise-free prediction") {
  Belief b = init_belief(Pose2d(0, 0, 0), quiet(3));
  predict(b, {1.0, 0.0, 2.0}, quiet(3));
  for (const auto& p : b.particles) {
    CHECK(p.pose.x == doctest::Approx(2.0));
    CHECK(p.pose.y == doctest::Approx(0.0));
  }
  CHECK(b.timestamp == 2.0);
  Belief c = init_belief(Pose2d(0, 0, 0), quiet(3));
  predict(c, {1.0, kPi / 2, 1.0}, quiet(3));
  for (const auto& p : c.particles) {
    CHECK(p.pose.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.pose.y == doctest::Approx(1.0));
    CHECK(p.pose.theta == doctest::Approx(kPi / 2));
  }
}

TEST_CASE("noisy prediction mean matches the noise-free update") {
  FilterConfig cfg;
  cfg.particle_count = 10000;
  cfg.sigma_init = 0.0;
  cfg.sigma_velocity = 0.3;
  cfg.sigma_heading = 0.05;
  Belief b = init_belief(Pose2d(0, 0, 0), cfg);
  predict(b, {1.0, 0.5, 1.0}, cfg);
  double mx = 0, my = 0;
  for (const auto& p : b.particles) {
    mx += p.pose.x;
    my += p.pose.y;
  }
  mx /= 10000;
  my /= 10000;
  // Per-axis spread is at most the speed noise plus the lever arm of the heading noise.
  const double bound = 3 * std::hypot(cfg.sigma_velocity, cfg.sigma_heading) / 100.0;
  // E[cos(h + e)] = cos(h) exp(-s^2 / 2) for Gaussian heading noise e.
  const double shrink = std::exp(-0.5 * cfg.sigma_heading * cfg.sigma_heading);
  CHECK(std::abs(mx - std::cos(0.5) * shrink) < bound);
  CHECK(std::abs(my - std::sin(0.5) * shrink) < bound);
}

TEST_CASE("predict rejects bad controls") {
  Belief b = init_belief(Pose2d(), quiet(2));
  CHECK_THROWS_AS(predict(b, {1.0, 0.0, 0.0}, quiet(2)), ConfigError);
  CHECK_THROWS_AS(predict(b, {1.0, 0.0, -1.0}, quiet(2)), ConfigError);
  CHECK_THROWS_AS(predict(b, {std::nan(""), 0.0, 1.0}, quiet(2)), ConfigError);
}

TEST_CASE("update gates uninformative frames") {
  const SemanticMap map = basin();
  FilterConfig cfg;
  Belief b = init_belief(Pose2d(40, 30, 0), cfg);
  const Belief before = b;
  AcousticImage empty(cfg.footprint, 0.0);
  CHECK_FALSE(update(b, empty, map, BaselineScorer{}, cfg));
  for (std::size_t k = 0; k < b.particles.size(); ++k) {
    CHECK(b.particles[k].pose == before.particles[k].pose);
    CHECK(b.particles[k].weight == before.particles[k].weight);
  }
  CHECK(b.rng == before.rng);

  AcousticImage other(SonarFootprint{40.0, 1.0, 10, 10}, 0.0);
  CHECK_THROWS_AS(update(b, other, map, BaselineScorer{}, cfg), DimensionMismatch);
}

TEST_CASE("oracle update gives the true-pose particle the largest weight") {
  const SemanticMap map = basin();
  FilterConfig cfg;
  cfg.seed = 3;
  const Pose2d truth(45, 30, 0.1);
  Belief b = init_belief(truth, cfg);
  b.particles[17].pose = truth;
  const AcousticImage img = render_sonar(map, truth, cfg.footprint, NoiseSpec{}, 1);
  REQUIRE(update(b, img, map, OracleScorer{}, cfg));
  Eigen::Index best = 0;
  b.weights().maxCoeff(&best);
  CHECK(best == 17);
  CHECK(std::abs(b.weights().sum() - 1.0) < 1e-9);
}

TEST_CASE("scorer errors propagate out of update") {
  const SemanticMap map = basin();
  FilterConfig cfg;
  Belief b = init_belief(Pose2d(45, 30, 0), cfg);
  AcousticImage img = render_sonar(map, Pose2d(45, 30, 0), cfg.footprint, NoiseSpec{}, 1);
  img.true_pose.reset();
  CHECK_THROWS_AS(update(b, img, map, OracleScorer{}, cfg), MissingGroundTruth);
}

TEST_CASE("roulette_select") {
  const std::vector<double> cum = {0.2, 0.2, 0.7, 1.0};
  CHECK(roulette_select(cum, 0.0) == 0);
  CHECK(roulette_select(cum, 0.19) == 0);
  CHECK(roulette_select(cum, 0.2) == 2);  // zero-weight particle 1 is never chosen
  CHECK(roulette_select(cum, 0.9999) == 3);
  CHECK(roulette_select(cum, 1.0) == 3);
  const std::vector<double> trailing_zero = {0.5, 1.0, 1.0};
  CHECK(roulette_select(trailing_zero, 1.0) == 1);
}

TEST_CASE("roulette multiplicities pass a chi-square test") {
  const std::vector<double> w = {0.2, 0.5, 0.3};
  std::vector<double> cum(3);
  std::partial_sum(w.begin(), w.end(), cum.begin());
  Rng rng(77);
  std::vector<int> counts(3, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[roulette_select(cum, rng.uniform())];
  double chi2 = 0;
  for (int k = 0; k < 3; ++k) chi2 += std::pow(counts[k] - draws * w[k], 2) / (draws * w[k]);
  CHECK(chi2 < 9.21);  // 2 dof, p = 0.01
}

TEST_CASE("degenerate weights resample onto one parent") {
  const SemanticMap map = basin();
  FilterConfig cfg = quiet(50);
  Belief b = init_belief(Pose2d(40, 30, 0), cfg);
  for (std::size_t k = 0; k < b.particles.size(); ++k) {
    b.particles[k].pose = Pose2d(35 + 0.1 * k, 30, 0);
    b.particles[k].weight = k == 4 ? 1.0 : 0.0;
  }
  resample(b, map, cfg);
  CHECK(b.particles.size() == 50);
  for (const auto& p : b.particles) {
    CHECK(p.pose == Pose2d(35.4, 30, 0));
    CHECK(p.weight == doctest::Approx(1.0 / 50));
  }
}

TEST_CASE("resample never leaves a particle on structure, off the map or in open water") {
  const SemanticMap map = basin();
  for (int s = 0; s < 20; ++s) {
    FilterConfig cfg;
    cfg.seed = s;
    cfg.sigma_init = 20.0;  // many children start invalid
    Belief b = init_belief(Pose2d(50, 30, 0), cfg);
    resample(b, map, cfg);
    REQUIRE(b.particles.size() == 120);
    int open_water = 0;
    for (const auto& p : b.particles) {
      const PoseValidity v = check_pose(map, p.pose, cfg.footprint);
      CHECK_FALSE(v.on_structure);
      CHECK_FALSE(v.out_of_map);
      open_water += v.open_water;
    }
    // Only uniform fallbacks may land in open water.
    CHECK(open_water < 120);
    CHECK(std::abs(b.weights().sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("resample rejects a belief without weight") {
  const SemanticMap map = basin();
  Belief b = init_belief(Pose2d(40, 30, 0), quiet(3));
  for (auto& p : b.particles) p.weight = 0.0;
  CHECK_THROWS_AS(resample(b, map, quiet(3)), Error);
}

TEST_CASE("uniform fallback on an all-structure map keeps particles in the map") {
  LabelRaster cells = LabelRaster::Constant(20, 20, 1);
  cells(5, 7) = 0;
  const SemanticMap map(cells, 1.0, Eigen::Vector2d::Zero());
  FilterConfig cfg;
  cfg.particle_count = 10;
  cfg.max_redraws = 2;
  Belief b = init_belief(Pose2d(3, 3, 0), cfg);
  resample(b, map, cfg);
  for (const auto& p : b.particles) {
    CHECK(map.contains(p.pose.position()));
    CHECK(map.at_world(p.pose.position()) != CellClass::Structure);
  }
}

TEST_CASE("estimate") {
  Belief b;
  b.particles = {{Pose2d(0, 0, 0), 0.5}, {Pose2d(2, 0, 0), 0.5}};
  PoseEstimate e = estimate(b);
  CHECK(e.pose.x == doctest::Approx(1.0));
  CHECK(e.pose.y == doctest::Approx(0.0));
  CHECK(e.spread == doctest::Approx(1.0));

  b.particles = {{Pose2d(0, 0, 170 * kPi / 180), 0.5}, {Pose2d(0, 0, -170 * kPi / 180), 0.5}};
  e = estimate(b);
  CHECK(std::abs(std::abs(e.pose.theta) - kPi) < 1e-9);

  b.particles = {{Pose2d(3, 4, 1), 0.25}, {Pose2d(3, 4, 1), 0.75}};
  e = estimate(b);
  CHECK(e.pose.x == doctest::Approx(3.0));
  CHECK(e.pose.theta == doctest::Approx(1.0));
  CHECK(e.spread == doctest::Approx(0.0));

  b.particles = {{Pose2d(0, 0, 0), 0.0}};
  CHECK_THROWS_AS(estimate(b), Error);
}
