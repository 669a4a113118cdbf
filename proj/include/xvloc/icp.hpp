#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "xvloc/errors.hpp"
#include "xvloc/geometry.hpp"

namespace xvloc {

/// Nearest-neighbour lookup over a fixed 2D cloud. Small clouds are searched
/// exhaustively; larger ones go through a uniform bucket grid.
template <typename Scalar>
class NearestNeighbor2 {
 public:
  static constexpr Eigen::Index kExhaustiveLimit = 200;

  explicit NearestNeighbor2(const PointCloud2<Scalar>& points, bool force_grid = false)
      : points_(points) {
    if (points_.cols() == 0) return;
    use_grid_ = force_grid || points_.cols() >= kExhaustiveLimit;
    if (use_grid_) build_grid();
  }

  /// Index of the closest point; `sq_dist` receives the squared distance.
  Eigen::Index nearest(const Vector2<Scalar>& q, Scalar& sq_dist) const {
    return use_grid_ ? nearest_grid(q, sq_dist) : nearest_exhaustive(q, sq_dist);
  }

  Eigen::Index nearest_exhaustive(const Vector2<Scalar>& q, Scalar& sq_dist) const {
    Eigen::Index best = -1;
    sq_dist = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < points_.cols(); ++i) {
      const Scalar d = (points_.col(i) - q).squaredNorm();
      if (d < sq_dist) {
        sq_dist = d;
        best = i;
      }
    }
    return best;
  }

 private:
  void build_grid() {
    lo_ = points_.rowwise().minCoeff();
    const Vector2<Scalar> extent = points_.rowwise().maxCoeff() - lo_;
    const Scalar area = std::max(extent.x(), Scalar(1e-9)) * std::max(extent.y(), Scalar(1e-9));
    const Scalar n = static_cast<Scalar>(points_.cols());
    // Flat clouds have ~zero area; the second bound keeps the cell count near n.
    cell_ = std::max({std::sqrt(area / n), extent.maxCoeff() / n, Scalar(1e-9)});
    nx_ = static_cast<int>(extent.x() / cell_) + 1;
    ny_ = static_cast<int>(extent.y() / cell_) + 1;

    // Counting sort of point indices into buckets.
    std::vector<int> cell_of(points_.cols());
    offsets_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    for (Eigen::Index i = 0; i < points_.cols(); ++i) {
      const auto [cx, cy] = cell_coords(points_.col(i));
      cell_of[i] = cy * nx_ + cx;
      ++offsets_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c < offsets_.size(); ++c) offsets_[c] += offsets_[c - 1];
    indices_.resize(points_.cols());
    std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
    for (Eigen::Index i = 0; i < points_.cols(); ++i) indices_[fill[cell_of[i]]++] = static_cast<int>(i);
  }

  std::pair<int, int> cell_coords(const Vector2<Scalar>& p) const {
    const int cx = std::clamp(static_cast<int>(std::floor((p.x() - lo_.x()) / cell_)), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor((p.y() - lo_.y()) / cell_)), 0, ny_ - 1);
    return {cx, cy};
  }

  Eigen::Index nearest_grid(const Vector2<Scalar>& q, Scalar& sq_dist) const {
    // Unclamped cell of the query, so ring k lies at least (k - 1) cells away.
    const Scalar fx = std::floor((q.x() - lo_.x()) / cell_);
    const Scalar fy = std::floor((q.y() - lo_.y()) / cell_);
    const long qx = static_cast<long>(std::clamp(fx, Scalar(-1e9), Scalar(1e9)));
    const long qy = static_cast<long>(std::clamp(fy, Scalar(-1e9), Scalar(1e9)));
    // Rings closer than k_min cannot intersect the grid.
    const long dx = qx < 0 ? -qx : std::max(0L, qx - (nx_ - 1));
    const long dy = qy < 0 ? -qy : std::max(0L, qy - (ny_ - 1));
    const long k_min = std::max(dx, dy);
    const long k_max = std::max(std::abs(qx) + nx_, std::abs(qy) + ny_);

    Eigen::Index best = -1;
    sq_dist = std::numeric_limits<Scalar>::infinity();
    for (long k = k_min; k <= k_max; ++k) {
      for (long cy = qy - k; cy <= qy + k; ++cy) {
        if (cy < 0 || cy >= ny_) continue;
        const bool edge_row = (cy == qy - k || cy == qy + k);
        const long step = edge_row ? 1 : 2 * k;
        for (long cx = qx - k; cx <= qx + k; cx += std::max(step, 1L)) {
          if (cx < 0 || cx >= nx_) continue;
          const std::size_t c = static_cast<std::size_t>(cy * nx_ + cx);
          for (int o = offsets_[c]; o < offsets_[c + 1]; ++o) {
            const Scalar d = (points_.col(indices_[o]) - q).squaredNorm();
            if (d < sq_dist || (d == sq_dist && indices_[o] < best)) {
              sq_dist = d;
              best = indices_[o];
            }
          }
        }
      }
      const Scalar bound = static_cast<Scalar>(k) * cell_;
      if (best >= 0 && sq_dist <= bound * bound) break;
    }
    return best;
  }

  PointCloud2<Scalar> points_;
  bool use_grid_ = false;
  Vector2<Scalar> lo_ = Vector2<Scalar>::Zero();
  Scalar cell_ = 1;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<int> offsets_;
  std::vector<int> indices_;
};

/// Closed-form least-squares rigid transform mapping src columns onto the
/// matching dst columns (2D Procrustes in atan2 form).
template <typename Scalar>
Rigid2<Scalar> fit_rigid(const PointCloud2<Scalar>& src, const PointCloud2<Scalar>& dst) {
  const Vector2<Scalar> src_mean = src.rowwise().mean();
  const Vector2<Scalar> dst_mean = dst.rowwise().mean();
  Scalar dot = 0;
  Scalar cross = 0;
  for (Eigen::Index i = 0; i < src.cols(); ++i) {
    const Vector2<Scalar> p = src.col(i) - src_mean;
    const Vector2<Scalar> q = dst.col(i) - dst_mean;
    dot += p.x() * q.x() + p.y() * q.y();
    cross += p.x() * q.y() - p.y() * q.x();
  }
  const Scalar angle = std::atan2(cross, dot);
  Rigid2<Scalar> rotation_only(angle, Vector2<Scalar>::Zero());
  return Rigid2<Scalar>(angle, dst_mean - rotation_only.rotation_matrix() * src_mean);
}

/// True when the cloud has fewer than three points or its scatter is rank deficient
/// (all points coincident or collinear).
template <typename Scalar>
bool is_degenerate_cloud(const PointCloud2<Scalar>& cloud) {
  if (cloud.cols() < 3) return true;
  const PointCloud2<Scalar> centered = cloud.colwise() - cloud.rowwise().mean();
  const Eigen::Matrix<Scalar, 2, 2> scatter = centered * centered.transpose() / Scalar(cloud.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> eig(scatter, Eigen::EigenvaluesOnly);
  const Scalar lo = eig.eigenvalues()(0);
  const Scalar hi = eig.eigenvalues()(1);
  return hi <= Scalar(1e-18) || lo <= Scalar(1e-10) * hi;
}

template <typename Scalar>
struct IcpResult {
  Rigid2<Scalar> transform;  // maps src into dst's frame
  Scalar residual = 0;       // RMS nearest-neighbour distance of the inliers at `transform`
  int iterations = 0;
  Eigen::Index inliers = 0;  // src points within max_match_dist of dst at `transform`
  std::vector<Scalar> residual_history;  // one entry per evaluated transform, starting with `initial`
};

/// Point-to-point ICP. Iterates nearest-neighbour correspondence and closed-form
/// rigid fit until the RMS residual improves by less than `conv_tol` or
/// `max_iters` fits have been made. Pairs farther apart than `max_match_dist`
/// are left out of the fit and the residual; the iteration stops early when
/// fewer than three pairs remain. Throws DegenerateCloud.
template <typename Scalar>
IcpResult<Scalar> icp_align(const PointCloud2<Scalar>& src, const PointCloud2<Scalar>& dst, int max_iters,
                            Scalar conv_tol, const Rigid2<Scalar>& initial = Rigid2<Scalar>::identity(),
                            Scalar max_match_dist = std::numeric_limits<Scalar>::infinity()) {
  if (is_degenerate_cloud(src) || is_degenerate_cloud(dst)) {
    throw DegenerateCloud("ICP needs at least 3 non-collinear points in each cloud (got " +
                          std::to_string(src.cols()) + " and " + std::to_string(dst.cols()) + ")");
  }
  const NearestNeighbor2<Scalar> index(dst);
  const Scalar gate = max_match_dist * max_match_dist;
  PointCloud2<Scalar> from(2, src.cols());
  PointCloud2<Scalar> to(2, src.cols());
  Eigen::Index pairs = 0;

  // Gathers the gated pairs for transform t and returns their RMS distance.
  auto correspond = [&](const Rigid2<Scalar>& t) {
    const PointCloud2<Scalar> moved = t * src;
    Scalar total = 0;
    pairs = 0;
    for (Eigen::Index i = 0; i < moved.cols(); ++i) {
      Scalar d2 = 0;
      const Eigen::Index j = index.nearest(moved.col(i), d2);
      if (!(d2 <= gate)) continue;
      from.col(pairs) = src.col(i);
      to.col(pairs) = dst.col(j);
      ++pairs;
      total += d2;
    }
    return pairs > 0 ? std::sqrt(total / static_cast<Scalar>(pairs)) : std::numeric_limits<Scalar>::infinity();
  };

  IcpResult<Scalar> result;
  result.transform = initial;
  result.residual = correspond(initial);
  result.inliers = pairs;
  result.residual_history.push_back(result.residual);

  for (int it = 0; it < max_iters && pairs >= 3; ++it) {
    const Rigid2<Scalar> next =
        fit_rigid<Scalar>(from.leftCols(pairs).eval(), to.leftCols(pairs).eval());
    const Scalar residual = correspond(next);
    result.transform = next;
    result.inliers = pairs;
    result.residual_history.push_back(residual);
    ++result.iterations;
    const Scalar improvement = result.residual - residual;
    result.residual = residual;
    if (!(improvement >= conv_tol)) break;
  }
  return result;
}

}  // namespace xvloc
