#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xvloc/filter.hpp"
#include "xvloc/geomap.hpp"
#include "xvloc/matcher.hpp"
#include "xvloc/message_log.hpp"
#include "xvloc/simulator.hpp"
#include "xvloc/sonar.hpp"

namespace xvloc {

struct LocalizeOptions {
  /// Seconds after the first record during which controls and frames are dropped,
  /// mimicking a filter that starts while the vehicle is already moving.
  double init_delay_s = 0.0;
  /// Rolling enhancement window (number of sonar frames, newest included).
  int batch_length = 5;
  EnhanceParams enhance;
};

struct StepRecord {
  double t = 0.0;
  Pose2d estimate;
  double spread = 0.0;
  bool applied_update = false;
  std::optional<Pose2d> ground_truth;
  std::optional<Pose2d> dead_reckoning;
};

struct RunResult {
  std::vector<StepRecord> steps;
  int frames_seen = 0;
  int updates_applied = 0;
};

/// Replays the log in timestamp order. Records sharing a timestamp form one
/// batch: compass, then odometry (predict), then sonar (enhance, update and,
/// when applied, resample), then ground truth. One step is emitted per batch.
/// The filter is initialized on the first ground-truth pose.
RunResult run_localization(const MessageLog& log, const FrameSource& frames, const SemanticMap& map,
                           const FilterConfig& cfg, const Scorer& scorer, const LocalizeOptions& options = {});

/// Columns: t,est_x,est_y,est_theta,spread,applied,gt_x,gt_y,gt_theta,dr_x,dr_y,dr_theta
/// (missing values are empty). Values use fixed 9-decimal formatting.
std::string result_to_csv(const RunResult& result);
void write_result_csv(const RunResult& result, const std::filesystem::path& path);
RunResult read_result_csv(const std::filesystem::path& path);

struct ErrorSample {
  double t = 0.0;
  double pf_error = 0.0;
  double baseline_error = 0.0;
};

struct Metrics {
  std::vector<ErrorSample> samples;
  double pf_mean = 0.0;
  double baseline_mean = 0.0;
  double pf_rmse = 0.0;
  double baseline_rmse = 0.0;
  double pf_max = 0.0;
  double baseline_max = 0.0;
  double pf_better_fraction = 0.0;  // share of samples with pf_error < baseline_error
};

/// Per-step position errors of the filter and of `baseline` (defaults to the
/// dead-reckoning columns of the result) against ground truth.
/// Throws MissingGroundTruth when no step carries ground truth.
Metrics evaluate(const RunResult& result);
Metrics evaluate(const RunResult& result, const std::vector<TimedPose>& baseline);

/// Rows "step,t,pf_error,dr_error" followed by summary_mean, summary_rmse,
/// summary_max and summary_pf_better_fraction rows.
std::string metrics_to_csv(const Metrics& metrics);
void write_metrics_csv(const Metrics& metrics, const std::filesystem::path& path);

/// Enhances every sonar frame of the log with its rolling window and writes
/// the results (same relative names) plus a copy of the log under `out_dir`.
void preprocess_sonar(const MessageLog& log, const FrameSource& frames, const SonarFootprint& fp,
                      const LocalizeOptions& options, const std::filesystem::path& out_dir);

}  // namespace xvloc
