#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "xvloc/geomap.hpp"
#include "xvloc/sonar.hpp"

namespace xvloc {

/// Non-negative, finite dissimilarity between an acoustic image and a map crop.
class MatchDistance {
 public:
  /// Throws Error when negative or non-finite.
  explicit MatchDistance(double value);
  double value() const { return value_; }
  auto operator<=>(const MatchDistance&) const = default;

 private:
  double value_;
};

/// Cross-domain similarity contract. Lower is better; implementations must be
/// pure and safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Throws DimensionMismatch when the image and crop shapes differ.
  virtual MatchDistance score(const AcousticImage& acoustic, const CropImage& crop) const = 0;
  virtual std::string_view name() const = 0;
};

/// 1 - IoU between the non-zero acoustic pixels and the crop's Structure cells.
/// Movable and Unknown cells never count as structure. Both masks empty gives 1.
class BaselineScorer final : public Scorer {
 public:
  MatchDistance score(const AcousticImage& acoustic, const CropImage& crop) const override;
  std::string_view name() const override { return "baseline"; }
};

/// Test instrument: position error plus absolute heading error (radians) between
/// the crop's source pose and the frame's ground-truth pose.
class OracleScorer final : public Scorer {
 public:
  /// Throws MissingGroundTruth for frames without a true pose.
  MatchDistance score(const AcousticImage& acoustic, const CropImage& crop) const override;
  std::string_view name() const override { return "oracle"; }
};

/// "baseline" or "oracle"; throws ConfigError otherwise.
std::unique_ptr<Scorer> make_scorer(std::string_view name);

/// Inverts distances into scores (dmax - d + dmin) and normalizes them to sum to one.
/// An all-zero distance vector yields the uniform vector. Throws EmptyInput for
/// an empty input and Error for negative or non-finite entries.
Eigen::VectorXd normalize_scores(const Eigen::Ref<const Eigen::VectorXd>& distances);

}  // namespace xvloc
