#include "xvloc/sonar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xvloc/errors.hpp"
#include "xvloc/icp.hpp"

namespace xvloc {

void AcousticImage::validate() const {
  footprint.validate();
  if (intensity.rows() != footprint.range_bins || intensity.cols() != footprint.bearing_bins) {
    throw DimensionMismatch("acoustic image is " + std::to_string(intensity.rows()) + "x" +
                            std::to_string(intensity.cols()) + " but footprint expects " +
                            std::to_string(footprint.range_bins) + "x" + std::to_string(footprint.bearing_bins));
  }
  if (!intensity.allFinite() || (intensity < 0.0f).any() || (intensity > 1.0f).any()) {
    throw ConfigError("acoustic intensities must be finite and within [0, 1]");
  }
}

AcousticImage acoustic_from_gray8(const Gray8& raster, const SonarFootprint& fp, double timestamp) {
  if (raster.rows() != fp.range_bins || raster.cols() != fp.bearing_bins) {
    throw DimensionMismatch("sonar frame is " + std::to_string(raster.rows()) + "x" +
                            std::to_string(raster.cols()) + " but footprint expects " +
                            std::to_string(fp.range_bins) + "x" + std::to_string(fp.bearing_bins));
  }
  AcousticImage img(fp, timestamp);
  img.intensity = raster.cast<float>() / 255.0f;
  return img;
}

Gray8 acoustic_to_gray8(const AcousticImage& img) {
  return (img.intensity.max(0.0f).min(1.0f) * 255.0f).round().cast<std::uint8_t>();
}

Eigen::ArrayXXf gradient_magnitude(const Eigen::ArrayXXf& in) {
  const Eigen::Index rows = in.rows();
  const Eigen::Index cols = in.cols();
  Eigen::ArrayXXf out(rows, cols);
  for (Eigen::Index b = 0; b < cols; ++b) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      float gr = 0.0f;
      float gb = 0.0f;
      if (rows > 1) {
        if (r == 0) gr = in(1, b) - in(0, b);
        else if (r == rows - 1) gr = in(r, b) - in(r - 1, b);
        else gr = 0.5f * (in(r + 1, b) - in(r - 1, b));
      }
      if (cols > 1) {
        if (b == 0) gb = in(r, 1) - in(r, 0);
        else if (b == cols - 1) gb = in(r, b) - in(r, b - 1);
        else gb = 0.5f * (in(r, b + 1) - in(r, b - 1));
      }
      out(r, b) = std::sqrt(gr * gr + gb * gb);
    }
  }
  return out;
}

PointCloud2d extract_centroids(const AcousticImage& img, const CentroidParams& params) {
  const Eigen::ArrayXXf grad = gradient_magnitude(img.intensity);
  const Eigen::Index rows = grad.rows();
  const Eigen::Index cols = grad.cols();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> visited =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);

  std::vector<Eigen::Vector2d> points;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blob;

  for (Eigen::Index b0 = 0; b0 < cols; ++b0) {
    for (Eigen::Index r0 = 0; r0 < rows; ++r0) {
      if (visited(r0, b0) || !(grad(r0, b0) > params.grad_threshold)) continue;
      blob.clear();
      stack.assign(1, {r0, b0});
      visited(r0, b0) = true;
      while (!stack.empty()) {
        const auto [r, b] = stack.back();
        stack.pop_back();
        blob.emplace_back(r, b);
        for (Eigen::Index dr = -1; dr <= 1; ++dr) {
          for (Eigen::Index db = -1; db <= 1; ++db) {
            const Eigen::Index nr = r + dr;
            const Eigen::Index nb = b + db;
            if (nr < 0 || nb < 0 || nr >= rows || nb >= cols || visited(nr, nb)) continue;
            if (!(grad(nr, nb) > params.grad_threshold)) continue;
            visited(nr, nb) = true;
            stack.emplace_back(nr, nb);
          }
        }
      }
      if (static_cast<int>(blob.size()) < params.min_blob_px) continue;

      double weight = 0.0;
      double sum_r = 0.0;
      double sum_b = 0.0;
      for (const auto& [r, b] : blob) {
        const double w = img.intensity(r, b);
        weight += w;
        sum_r += w * static_cast<double>(r);
        sum_b += w * static_cast<double>(b);
      }
      if (weight <= 0.0) {
        // A border ring on an all-dark side; fall back to the plain centroid.
        weight = static_cast<double>(blob.size());
        sum_r = sum_b = 0.0;
        for (const auto& [r, b] : blob) {
          sum_r += static_cast<double>(r);
          sum_b += static_cast<double>(b);
        }
      }
      points.push_back(img.footprint.sensor_point(sum_r / weight, sum_b / weight));
    }
  }

  PointCloud2d cloud(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) cloud.col(static_cast<Eigen::Index>(i)) = points[i];
  return cloud;
}

namespace {

void require_shared_footprint(std::span<const AcousticImage> batch) {
  for (const auto& frame : batch) {
    if (!(frame.footprint == batch.back().footprint) ||
        frame.intensity.rows() != batch.back().intensity.rows() ||
        frame.intensity.cols() != batch.back().intensity.cols()) {
      throw DimensionMismatch("all frames of an enhancement batch must share one footprint");
    }
  }
}

}  // namespace

std::vector<std::optional<Rigid2d>> register_batch(std::span<const AcousticImage> batch,
                                                   const EnhanceParams& params,
                                                   std::span<const Pose2d> odometry_poses) {
  if (batch.empty()) throw EmptyInput("enhancement batch is empty");
  require_shared_footprint(batch);
  if (!odometry_poses.empty() && odometry_poses.size() != batch.size()) {
    throw DimensionMismatch("odometry_poses must have one pose per batch frame");
  }

  const std::size_t n = batch.size();
  std::vector<std::optional<Rigid2d>> to_newest(n);
  to_newest[n - 1] = Rigid2d::identity();
  if (n == 1) return to_newest;

  std::vector<PointCloud2d> clouds(n);
  for (std::size_t i = 0; i < n; ++i) clouds[i] = extract_centroids(batch[i], params.centroids);

  for (std::size_t i = n - 1; i-- > 0;) {
    // Link to the closest newer frame that is itself registered.
    std::size_t j = i + 1;
    while (j < n && !to_newest[j]) ++j;
    if (j == n) break;
    const Rigid2d initial =
        odometry_poses.empty() ? Rigid2d::identity() : relative_transform(odometry_poses[j], odometry_poses[i]);
    try {
      const auto fit =
          icp_align<double>(clouds[i], clouds[j], params.max_iters, params.conv_tol, initial, params.max_match_dist);
      if (fit.inliers >= params.min_inliers && fit.residual <= params.max_residual) {
        to_newest[i] = *to_newest[j] * fit.transform;
      }
    } catch (const DegenerateCloud&) {
      // Unregistrable frame; it is left out of the average.
    }
  }
  return to_newest;
}

AcousticImage average_registered(std::span<const AcousticImage> batch,
                                 std::span<const std::optional<Rigid2d>> transforms) {
  if (batch.empty()) throw EmptyInput("enhancement batch is empty");
  if (transforms.size() != batch.size()) throw DimensionMismatch("one transform per batch frame is required");
  if (!transforms.back() || !transforms.back()->is_identity()) {
    throw Error("the newest frame must be registered with the identity transform");
  }
  require_shared_footprint(batch);

  const AcousticImage& newest = batch.back();
  const SonarFootprint& fp = newest.footprint;
  const Eigen::Index rows = newest.intensity.rows();
  const Eigen::Index cols = newest.intensity.cols();

  Eigen::ArrayXXd sum = Eigen::ArrayXXd::Zero(rows, cols);
  Eigen::ArrayXXd count = Eigen::ArrayXXd::Zero(rows, cols);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!transforms[i]) continue;
    const Eigen::ArrayXXf& src = batch[i].intensity;
    if (transforms[i]->is_identity()) {
      sum += src.cast<double>();
      count += 1.0;
      continue;
    }
    const Rigid2d newest_to_frame = transforms[i]->inverse();
    for (Eigen::Index b = 0; b < cols; ++b) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Vector2d p = newest_to_frame * fp.sensor_point(static_cast<double>(r), static_cast<double>(b));
        const double fr = fp.range_bin_of(p.norm());
        const double fb = fp.bearing_bin_of(std::atan2(p.y(), p.x()));
        if (!(fr >= -0.5 && fr <= rows - 0.5 && fb >= -0.5 && fb <= cols - 0.5)) continue;
        const double cr = std::clamp(fr, 0.0, static_cast<double>(rows - 1));
        const double cb = std::clamp(fb, 0.0, static_cast<double>(cols - 1));
        const Eigen::Index r0 = std::min(static_cast<Eigen::Index>(cr), rows - 1);
        const Eigen::Index b0 = std::min(static_cast<Eigen::Index>(cb), cols - 1);
        const Eigen::Index r1 = std::min(r0 + 1, rows - 1);
        const Eigen::Index b1 = std::min(b0 + 1, cols - 1);
        const double tr = cr - static_cast<double>(r0);
        const double tb = cb - static_cast<double>(b0);
        const double value = (1 - tr) * ((1 - tb) * src(r0, b0) + tb * src(r0, b1)) +
                             tr * ((1 - tb) * src(r1, b0) + tb * src(r1, b1));
        sum(r, b) += value;
        count(r, b) += 1.0;
      }
    }
  }

  AcousticImage out = newest;
  // The newest frame always covers every pixel, so count >= 1.
  out.intensity = (sum / count).min(1.0).max(0.0).cast<float>();
  return out;
}

AcousticImage enhance(std::span<const AcousticImage> batch, const EnhanceParams& params,
                      std::span<const Pose2d> odometry_poses) {
  const auto transforms = register_batch(batch, params, odometry_poses);
  if (std::count_if(transforms.begin(), transforms.end(), [](const auto& t) { return t.has_value(); }) == 1) {
    return batch.back();
  }
  return average_registered(batch, transforms);
}

bool is_informative(const AcousticImage& img, double threshold) {
  const auto nonzero = (img.intensity > 0.0f).count();
  return static_cast<double>(nonzero) / static_cast<double>(img.intensity.size()) >= threshold;
}

}  // namespace xvloc
