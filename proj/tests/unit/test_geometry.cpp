#include <doctest.h>

#include <numbers>

#include "xvloc/geometry.hpp"
#include "xvloc/random.hpp"

using namespace xvloc;
constexpr double kPi = std::numbers::pi;

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2 * kPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(-2 * kPi - 0.25) == doctest::Approx(-0.25));
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-100.0, 100.0);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::remainder(w - a, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("Pose2 normalizes its heading") {
  const Pose2d p(1.0, 2.0, 3 * kPi / 2);
  CHECK(p.theta == doctest::Approx(-kPi / 2));
  CHECK(p.position() == Eigen::Vector2d(1.0, 2.0));
}

TEST_CASE("Rigid2 acts on points and clouds consistently") {
  const Rigid2d t(kPi / 2, Eigen::Vector2d(1.0, 0.0));
  const Eigen::Vector2d p = t * Eigen::Vector2d(1.0, 0.0);
  CHECK(p.x() == doctest::Approx(1.0));
  CHECK(p.y() == doctest::Approx(1.0));

  PointCloud2d cloud(2, 3);
  cloud << 0, 1, 2, 0, -1, 5;
  const PointCloud2d moved = t * cloud;
  for (int i = 0; i < 3; ++i) CHECK((moved.col(i) - t * Eigen::Vector2d(cloud.col(i))).norm() < 1e-12);
}

TEST_CASE("Rigid2 composition and inverse") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Rigid2d a(rng.uniform(-4, 4), Eigen::Vector2d(rng.uniform(-5, 5), rng.uniform(-5, 5)));
    const Rigid2d b(rng.uniform(-4, 4), Eigen::Vector2d(rng.uniform(-5, 5), rng.uniform(-5, 5)));
    const Eigen::Vector2d p(rng.uniform(-3, 3), rng.uniform(-3, 3));
    CHECK(((a * b) * p - a * (b * p)).norm() < 1e-12);
    CHECK(((a.inverse() * a) * p - p).norm() < 1e-12);
    CHECK(std::abs(wrap_angle((a * a.inverse()).rotation())) < 1e-12);
  }
  CHECK(Rigid2d::identity().is_identity());
  CHECK_FALSE(Rigid2d(0.1, Eigen::Vector2d::Zero()).is_identity());
}

TEST_CASE("relative_transform maps the second pose's frame into the first") {
  const Pose2d from(1.0, 1.0, kPi / 2);
  const Pose2d to(1.0, 3.0, kPi / 2);
  const Rigid2d rel = relative_transform(from, to);
  // `to` sits 2 m ahead of `from` along from's x axis.
  CHECK(rel.translation().x() == doctest::Approx(2.0));
  CHECK(rel.translation().y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rel.rotation() == doctest::Approx(0.0).epsilon(1e-12));
  // A point 1 m ahead of `to` is 3 m ahead of `from`.
  const Eigen::Vector2d p = rel * Eigen::Vector2d(1.0, 0.0);
  CHECK(p.x() == doctest::Approx(3.0));
}
