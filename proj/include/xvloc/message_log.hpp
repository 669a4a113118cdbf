#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "xvloc/geometry.hpp"
#include "xvloc/sonar.hpp"

namespace xvloc {

struct OdomRecord {
  double t = 0.0;
  double v_x = 0.0;
  bool operator==(const OdomRecord&) const = default;
};

struct CompassRecord {
  double t = 0.0;
  double heading = 0.0;
  bool operator==(const CompassRecord&) const = default;
};

struct SonarRecord {
  double t = 0.0;
  std::string frame;  // path relative to the log directory
  bool operator==(const SonarRecord&) const = default;
};

struct GroundTruthRecord {
  double t = 0.0;
  Pose2d pose;
  bool operator==(const GroundTruthRecord&) const = default;
};

using LogRecord = std::variant<OdomRecord, CompassRecord, SonarRecord, GroundTruthRecord>;

inline double record_time(const LogRecord& record) {
  return std::visit([](const auto& r) { return r.t; }, record);
}

/// Time-ordered sensor stream.
struct MessageLog {
  std::vector<LogRecord> records;

  /// Throws IoError (with the record index) on decreasing timestamps.
  void validate() const;
  std::vector<GroundTruthRecord> ground_truth() const;
};

/// One JSON object per line:
///   {"t": s, "type": "odom", "v_x": m/s}
///   {"t": s, "type": "compass", "heading": rad}
///   {"t": s, "type": "sonar", "frame": "relative/path.pgm"}
///   {"t": s, "type": "gps", "x": m, "y": m, "theta": rad}
/// Throws IoError with the 1-based line number on malformed input.
MessageLog read_log(const std::filesystem::path& jsonl);
void write_log(const MessageLog& log, const std::filesystem::path& jsonl);

/// Conventional layout of a log directory.
inline std::filesystem::path log_file_in(const std::filesystem::path& dir) { return dir / "log.jsonl"; }

/// Resolves sonar records to images.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual AcousticImage load(const SonarRecord& record, const SonarFootprint& fp) const = 0;
};

/// Frames stored as 8-bit PGM under a log directory.
class DirectoryFrameSource final : public FrameSource {
 public:
  explicit DirectoryFrameSource(std::filesystem::path root) : root_(std::move(root)) {}
  AcousticImage load(const SonarRecord& record, const SonarFootprint& fp) const override;

 private:
  std::filesystem::path root_;
};

/// Frames kept in memory, keyed by their relative path.
class MemoryFrameSource final : public FrameSource {
 public:
  explicit MemoryFrameSource(std::map<std::string, AcousticImage> frames) : frames_(std::move(frames)) {}
  AcousticImage load(const SonarRecord& record, const SonarFootprint& fp) const override;

 private:
  std::map<std::string, AcousticImage> frames_;
};

}  // namespace xvloc
