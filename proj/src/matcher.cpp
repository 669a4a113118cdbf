#include "xvloc/matcher.hpp"

#include <cmath>

#include "xvloc/errors.hpp"

namespace xvloc {

MatchDistance::MatchDistance(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0) throw Error("match distance must be finite and >= 0");
}

namespace {

void require_same_shape(const AcousticImage& acoustic, const CropImage& crop) {
  if (acoustic.intensity.rows() != crop.labels.rows() || acoustic.intensity.cols() != crop.labels.cols()) {
    throw DimensionMismatch("acoustic image is " + std::to_string(acoustic.intensity.rows()) + "x" +
                            std::to_string(acoustic.intensity.cols()) + ", crop is " +
                            std::to_string(crop.labels.rows()) + "x" + std::to_string(crop.labels.cols()));
  }
}

}  // namespace

MatchDistance BaselineScorer::score(const AcousticImage& acoustic, const CropImage& crop) const {
  require_same_shape(acoustic, crop);
  constexpr auto kStructure = static_cast<std::uint8_t>(CellClass::Structure);
  std::int64_t intersection = 0;
  std::int64_t uni = 0;
  // The acoustic raster is column-major and the crop row-major; walk columns.
  for (Eigen::Index b = 0; b < acoustic.intensity.cols(); ++b) {
    for (Eigen::Index r = 0; r < acoustic.intensity.rows(); ++r) {
      const bool echo = acoustic.intensity(r, b) > 0.0f;
      const bool structure = crop.labels(r, b) == kStructure;
      intersection += echo && structure;
      uni += echo || structure;
    }
  }
  if (uni == 0) return MatchDistance(1.0);
  return MatchDistance(1.0 - static_cast<double>(intersection) / static_cast<double>(uni));
}

MatchDistance OracleScorer::score(const AcousticImage& acoustic, const CropImage& crop) const {
  require_same_shape(acoustic, crop);
  if (!acoustic.true_pose) throw MissingGroundTruth("oracle scorer needs a frame tagged with its true pose");
  const Pose2d& truth = *acoustic.true_pose;
  const double position_error = (crop.pose.position() - truth.position()).norm();
  const double heading_error = std::abs(wrap_angle(crop.pose.theta - truth.theta));
  return MatchDistance(position_error + heading_error);
}

std::unique_ptr<Scorer> make_scorer(std::string_view name) {
  if (name == "baseline") return std::make_unique<BaselineScorer>();
  if (name == "oracle") return std::make_unique<OracleScorer>();
  throw ConfigError("unknown scorer '" + std::string(name) + "' (expected baseline or oracle)");
}

Eigen::VectorXd normalize_scores(const Eigen::Ref<const Eigen::VectorXd>& distances) {
  if (distances.size() == 0) throw EmptyInput("normalize_scores needs at least one distance");
  if (!distances.allFinite() || (distances.array() < 0.0).any()) {
    throw Error("distances must be finite and non-negative");
  }
  const double dmax = distances.maxCoeff();
  const double dmin = distances.minCoeff();
  const Eigen::VectorXd inverted = (dmax + dmin) - distances.array();
  const double total = inverted.sum();
  if (total == 0.0) return Eigen::VectorXd::Constant(distances.size(), 1.0 / static_cast<double>(distances.size()));
  return inverted / total;
}

}  // namespace xvloc
