#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "xvloc/geomap.hpp"
#include "xvloc/geometry.hpp"
#include "xvloc/image_io.hpp"

namespace xvloc {

/// Polar fan image: rows are range bins, columns bearing bins, intensities in [0, 1].
struct AcousticImage {
  Eigen::ArrayXXf intensity;
  double timestamp = 0.0;
  SonarFootprint footprint;
  /// Ground-truth sensor pose; only simulator frames carry it.
  std::optional<Pose2d> true_pose;

  AcousticImage() = default;
  AcousticImage(const SonarFootprint& fp, double t)
      : intensity(Eigen::ArrayXXf::Zero(fp.range_bins, fp.bearing_bins)), timestamp(t), footprint(fp) {}

  /// Throws DimensionMismatch or ConfigError.
  void validate() const;
};

/// 0..255 maps linearly onto [0, 1].
AcousticImage acoustic_from_gray8(const Gray8& raster, const SonarFootprint& fp, double timestamp);
Gray8 acoustic_to_gray8(const AcousticImage& img);

/// Central-difference gradient magnitude on the polar raster (one-sided at the borders).
Eigen::ArrayXXf gradient_magnitude(const Eigen::ArrayXXf& intensity);

struct CentroidParams {
  float grad_threshold = 0.1f;  // intensity per bin
  int min_blob_px = 4;
};

/// One sensor-frame point per 8-connected blob of above-threshold gradient
/// magnitude: the blob's intensity-weighted bin centroid mapped through the fan
/// geometry. Blobs smaller than min_blob_px are ignored.
PointCloud2d extract_centroids(const AcousticImage& img, const CentroidParams& params = {});

struct EnhanceParams {
  CentroidParams centroids;
  int max_iters = 50;
  double conv_tol = 1e-6;       // meters
  double max_match_dist = 2.0;  // meters; farther centroid pairs are outliers
  int min_inliers = 4;
  double max_residual = 0.5;    // meters, inlier RMS; worse registrations are dropped
};

/// Registration of every batch frame into the newest frame's sensor frame.
/// Entry i is the transform taking frame i points into the newest frame, or
/// nullopt when the frame could not be registered. The last entry is identity.
///
/// `odometry_poses`, when given, holds one pose per frame and seeds each ICP
/// with the odometry-predicted relative motion.
std::vector<std::optional<Rigid2d>> register_batch(std::span<const AcousticImage> batch,
                                                   const EnhanceParams& params,
                                                   std::span<const Pose2d> odometry_poses = {});

/// Resamples every registered frame into the newest frame's polar grid
/// (bilinear on intensity) and returns the per-pixel mean over the frames that
/// cover each pixel.
AcousticImage average_registered(std::span<const AcousticImage> batch,
                                 std::span<const std::optional<Rigid2d>> transforms);

/// Batch ordered oldest to newest; returns the enhanced newest frame.
AcousticImage enhance(std::span<const AcousticImage> batch, const EnhanceParams& params = {},
                      std::span<const Pose2d> odometry_poses = {});

/// True when at least `threshold` of the pixels are non-zero.
bool is_informative(const AcousticImage& img, double threshold = 0.02);

}  // namespace xvloc
