#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace xvloc {

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  Scalar wrapped = std::remainder(angle, Scalar(2) * kPi);
  if (wrapped <= -kPi) wrapped += Scalar(2) * kPi;
  return wrapped;
}

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

/// Column-major 2 x N cloud; one point per column.
template <typename Scalar>
using PointCloud2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

template <typename Scalar>
struct Pose2 {
  Scalar x{0};
  Scalar y{0};
  Scalar theta{0};

  Pose2() = default;
  Pose2(Scalar x_, Scalar y_, Scalar theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Vector2<Scalar> position() const { return {x, y}; }

  bool operator==(const Pose2&) const = default;
};

/// Rotation followed by translation: p' = R(rotation) p + translation.
template <typename Scalar>
class Rigid2 {
 public:
  using Vec = Vector2<Scalar>;
  using Mat = Eigen::Matrix<Scalar, 2, 2>;

  Rigid2() : rotation_(0), translation_(Vec::Zero()) {}
  Rigid2(Scalar rotation, const Vec& translation)
      : rotation_(wrap_angle(rotation)), translation_(translation) {}

  static Rigid2 identity() { return Rigid2(); }

  /// Transform taking points expressed in `pose`'s frame into the world frame.
  static Rigid2 from_pose(const Pose2<Scalar>& pose) {
    return Rigid2(pose.theta, pose.position());
  }

  Scalar rotation() const { return rotation_; }
  const Vec& translation() const { return translation_; }

  Mat rotation_matrix() const {
    const Scalar c = std::cos(rotation_);
    const Scalar s = std::sin(rotation_);
    Mat r;
    r << c, -s, s, c;
    return r;
  }

  bool is_identity() const { return rotation_ == Scalar(0) && translation_.isZero(0); }

  Vec operator*(const Vec& p) const { return rotation_matrix() * p + translation_; }

  PointCloud2<Scalar> operator*(const PointCloud2<Scalar>& cloud) const {
    return (rotation_matrix() * cloud).colwise() + translation_;
  }

  Rigid2 operator*(const Rigid2& rhs) const {
    return Rigid2(rotation_ + rhs.rotation_, rotation_matrix() * rhs.translation_ + translation_);
  }

  Rigid2 inverse() const {
    return Rigid2(-rotation_, -(rotation_matrix().transpose() * translation_));
  }

 private:
  Scalar rotation_;
  Vec translation_;
};

using Pose2d = Pose2<double>;
using Rigid2d = Rigid2<double>;
using PointCloud2d = PointCloud2<double>;
using PointCloud2f = PointCloud2<float>;

/// Expresses `to` in the frame of `from`, i.e. the transform mapping points in
/// `to`'s sensor frame into `from`'s sensor frame.
template <typename Scalar>
Rigid2<Scalar> relative_transform(const Pose2<Scalar>& from, const Pose2<Scalar>& to) {
  return Rigid2<Scalar>::from_pose(from).inverse() * Rigid2<Scalar>::from_pose(to);
}

}  // namespace xvloc
