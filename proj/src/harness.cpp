#include "xvloc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "xvloc/errors.hpp"

namespace xvloc {

namespace {

template <typename Fn>
void for_each_batch(const MessageLog& log, Fn&& fn) {
  std::size_t i = 0;
  while (i < log.records.size()) {
    std::size_t j = i;
    const double t = record_time(log.records[i]);
    while (j < log.records.size() && record_time(log.records[j]) == t) ++j;
    fn(i, t, std::span<const LogRecord>(log.records.data() + i, j - i));
    i = j;
  }
}

std::optional<std::vector<TimedPose>> try_dead_reckoning(const MessageLog& log) {
  try {
    return dead_reckoning(log);
  } catch (const EmptyLog&) {
    return std::nullopt;
  }
}

// Rolling window of raw frames and their odometry poses.
class FrameWindow {
 public:
  explicit FrameWindow(int length) : length_(static_cast<std::size_t>(std::max(1, length))) {}

  void push(AcousticImage frame, std::optional<Pose2d> odometry_pose) {
    frames_.push_back(std::move(frame));
    poses_.push_back(odometry_pose);
    while (frames_.size() > length_) {
      frames_.pop_front();
      poses_.pop_front();
    }
  }

  AcousticImage enhanced(const EnhanceParams& params) const {
    const std::vector<AcousticImage> batch(frames_.begin(), frames_.end());
    std::vector<Pose2d> poses;
    if (std::all_of(poses_.begin(), poses_.end(), [](const auto& p) { return p.has_value(); })) {
      for (const auto& p : poses_) poses.push_back(*p);
    }
    return enhance(batch, params, poses);
  }

 private:
  std::size_t length_;
  std::deque<AcousticImage> frames_;
  std::deque<std::optional<Pose2d>> poses_;
};

std::string record_context(std::size_t index) { return "log record " + std::to_string(index + 1) + ": "; }

}  // namespace

RunResult run_localization(const MessageLog& log, const FrameSource& frames, const SemanticMap& map,
                           const FilterConfig& cfg, const Scorer& scorer, const LocalizeOptions& options) {
  cfg.validate();
  log.validate();
  const std::vector<GroundTruthRecord> truth = log.ground_truth();
  if (truth.empty()) throw ConfigError("the log has no gps record to initialize the filter from");
  const std::optional<std::vector<TimedPose>> dr = try_dead_reckoning(log);

  std::vector<TimedPose> truth_track;
  for (const auto& gt : truth) truth_track.push_back({gt.t, gt.pose});

  Belief belief = init_belief(truth.front().pose, cfg, truth.front().t);
  const double active_from = record_time(log.records.front()) + options.init_delay_s;
  std::optional<double> heading;
  double last_odom_t = truth.front().t;
  FrameWindow window(options.batch_length);
  RunResult result;

  for_each_batch(log, [&](std::size_t first_index, double t, std::span<const LogRecord> batch) {
    const bool active = t >= active_from;
    StepRecord step;
    step.t = t;

    for (const auto& r : batch) {
      if (const auto* c = std::get_if<CompassRecord>(&r)) heading = c->heading;
    }
    for (const auto& r : batch) {
      const auto* odom = std::get_if<OdomRecord>(&r);
      if (!odom) continue;
      const double dt = t - last_odom_t;
      last_odom_t = t;
      if (active && heading && dt > 0.0) predict(belief, {odom->v_x, *heading, dt}, cfg);
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto* sonar = std::get_if<SonarRecord>(&batch[k]);
      if (!sonar || !active) continue;
      AcousticImage frame;
      try {
        frame = frames.load(*sonar, cfg.footprint);
      } catch (const IoError& e) {
        throw IoError(record_context(first_index + k) + e.what());
      } catch (const DimensionMismatch& e) {
        throw ConfigError(record_context(first_index + k) + e.what());
      }
      frame.timestamp = t;
      if (!frame.true_pose) frame.true_pose = pose_at(truth_track, t);
      window.push(std::move(frame), dr ? std::optional<Pose2d>(pose_at(*dr, t)) : std::nullopt);
      ++result.frames_seen;
      const AcousticImage observation = window.enhanced(options.enhance);
      if (update(belief, observation, map, scorer, cfg)) {
        resample(belief, map, cfg);
        step.applied_update = true;
        ++result.updates_applied;
      }
    }
    for (const auto& r : batch) {
      if (const auto* gt = std::get_if<GroundTruthRecord>(&r)) step.ground_truth = gt->pose;
    }

    const PoseEstimate est = estimate(belief);
    step.estimate = est.pose;
    step.spread = est.spread;
    if (dr) step.dead_reckoning = pose_at(*dr, t);
    result.steps.push_back(step);
  });
  return result;
}

namespace {

std::string fmt_value(double v) { return fmt::format("{:.9f}", v); }

void append_pose(std::string& line, const std::optional<Pose2d>& pose) {
  if (pose) {
    line += fmt::format(",{},{},{}", fmt_value(pose->x), fmt_value(pose->y), fmt_value(pose->theta));
  } else {
    line += ",,,";
  }
}

constexpr const char* kResultHeader = "t,est_x,est_y,est_theta,spread,applied,gt_x,gt_y,gt_theta,dr_x,dr_y,dr_theta";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("result CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

std::optional<Pose2d> parse_pose(const std::vector<std::string>& f, std::size_t at, std::size_t line_no) {
  if (f[at].empty() && f[at + 1].empty() && f[at + 2].empty()) return std::nullopt;
  return Pose2d(parse_double(f[at], line_no), parse_double(f[at + 1], line_no), parse_double(f[at + 2], line_no));
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string result_to_csv(const RunResult& result) {
  std::string out = std::string(kResultHeader) + "\n";
  for (const auto& s : result.steps) {
    std::string line = fmt::format("{},{},{},{},{},{}", fmt_value(s.t), fmt_value(s.estimate.x),
                                   fmt_value(s.estimate.y), fmt_value(s.estimate.theta), fmt_value(s.spread),
                                   s.applied_update ? 1 : 0);
    append_pose(line, s.ground_truth);
    append_pose(line, s.dead_reckoning);
    out += line;
    out += '\n';
  }
  return out;
}

void write_result_csv(const RunResult& result, const std::filesystem::path& path) {
  write_text(result_to_csv(result), path);
}

RunResult read_result_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) throw IoError(path.string() + ": not a localization result CSV");
  RunResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 12) throw IoError("result CSV line " + std::to_string(line_no) + ": expected 12 fields");
    StepRecord s;
    s.t = parse_double(f[0], line_no);
    s.estimate = Pose2d(parse_double(f[1], line_no), parse_double(f[2], line_no), parse_double(f[3], line_no));
    s.spread = parse_double(f[4], line_no);
    s.applied_update = f[5] == "1";
    s.ground_truth = parse_pose(f, 6, line_no);
    s.dead_reckoning = parse_pose(f, 9, line_no);
    result.steps.push_back(s);
    result.updates_applied += s.applied_update;
  }
  return result;
}

namespace {

Metrics summarize(std::vector<ErrorSample> samples) {
  if (samples.empty()) throw MissingGroundTruth("no step carries both ground truth and an estimate to compare");
  Metrics m;
  m.samples = std::move(samples);
  double pf_sq = 0.0;
  double base_sq = 0.0;
  std::size_t better = 0;
  for (const auto& s : m.samples) {
    m.pf_mean += s.pf_error;
    m.baseline_mean += s.baseline_error;
    pf_sq += s.pf_error * s.pf_error;
    base_sq += s.baseline_error * s.baseline_error;
    m.pf_max = std::max(m.pf_max, s.pf_error);
    m.baseline_max = std::max(m.baseline_max, s.baseline_error);
    better += s.pf_error < s.baseline_error;
  }
  const double n = static_cast<double>(m.samples.size());
  m.pf_mean /= n;
  m.baseline_mean /= n;
  m.pf_rmse = std::sqrt(pf_sq / n);
  m.baseline_rmse = std::sqrt(base_sq / n);
  m.pf_better_fraction = static_cast<double>(better) / n;
  return m;
}

}  // namespace

Metrics evaluate(const RunResult& result) {
  std::vector<ErrorSample> samples;
  bool any_truth = false;
  for (const auto& s : result.steps) {
    if (!s.ground_truth) continue;
    any_truth = true;
    if (!s.dead_reckoning) continue;
    samples.push_back({s.t, (s.estimate.position() - s.ground_truth->position()).norm(),
                       (s.dead_reckoning->position() - s.ground_truth->position()).norm()});
  }
  if (!any_truth) throw MissingGroundTruth("the result has no ground truth");
  return summarize(std::move(samples));
}

Metrics evaluate(const RunResult& result, const std::vector<TimedPose>& baseline) {
  std::vector<ErrorSample> samples;
  for (const auto& s : result.steps) {
    if (!s.ground_truth) continue;
    samples.push_back({s.t, (s.estimate.position() - s.ground_truth->position()).norm(),
                       (pose_at(baseline, s.t).position() - s.ground_truth->position()).norm()});
  }
  if (samples.empty()) throw MissingGroundTruth("the result has no ground truth");
  return summarize(std::move(samples));
}

std::string metrics_to_csv(const Metrics& m) {
  auto v = [](double x) { return fmt::format("{:.12f}", x); };
  std::string out = "row,t,pf_error,dr_error\n";
  for (const auto& s : m.samples) out += fmt::format("step,{},{},{}\n", v(s.t), v(s.pf_error), v(s.baseline_error));
  out += fmt::format("summary_mean,,{},{}\n", v(m.pf_mean), v(m.baseline_mean));
  out += fmt::format("summary_rmse,,{},{}\n", v(m.pf_rmse), v(m.baseline_rmse));
  out += fmt::format("summary_max,,{},{}\n", v(m.pf_max), v(m.baseline_max));
  out += fmt::format("summary_pf_better_fraction,,{},\n", v(m.pf_better_fraction));
  return out;
}

void write_metrics_csv(const Metrics& metrics, const std::filesystem::path& path) {
  write_text(metrics_to_csv(metrics), path);
}

void preprocess_sonar(const MessageLog& log, const FrameSource& frames, const SonarFootprint& fp,
                      const LocalizeOptions& options, const std::filesystem::path& out_dir) {
  log.validate();
  const std::optional<std::vector<TimedPose>> dr = try_dead_reckoning(log);
  FrameWindow window(options.batch_length);
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto* sonar = std::get_if<SonarRecord>(&log.records[i]);
    if (!sonar) continue;
    AcousticImage frame;
    try {
      frame = frames.load(*sonar, fp);
    } catch (const IoError& e) {
      throw IoError(record_context(i) + e.what());
    } catch (const DimensionMismatch& e) {
      throw ConfigError(record_context(i) + e.what());
    }
    window.push(std::move(frame), dr ? std::optional<Pose2d>(pose_at(*dr, sonar->t)) : std::nullopt);
    write_pgm(out_dir / sonar->frame, acoustic_to_gray8(window.enhanced(options.enhance)));
  }
  write_log(log, log_file_in(out_dir));
}

}  // namespace xvloc
