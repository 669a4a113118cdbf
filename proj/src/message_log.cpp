#include "xvloc/message_log.hpp"

#include <fstream>

#include <json.hpp>

#include "xvloc/errors.hpp"
#include "xvloc/image_io.hpp"

namespace xvloc {

void MessageLog::validate() const {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (record_time(records[i]) < record_time(records[i - 1])) {
      throw IoError("log record " + std::to_string(i + 1) + ": timestamp goes backwards");
    }
  }
}

std::vector<GroundTruthRecord> MessageLog::ground_truth() const {
  std::vector<GroundTruthRecord> out;
  for (const auto& record : records) {
    if (const auto* gt = std::get_if<GroundTruthRecord>(&record)) out.push_back(*gt);
  }
  return out;
}

namespace {

nlohmann::json to_json_line(const LogRecord& record) {
  struct Visitor {
    nlohmann::json operator()(const OdomRecord& r) const { return {{"t", r.t}, {"type", "odom"}, {"v_x", r.v_x}}; }
    nlohmann::json operator()(const CompassRecord& r) const {
      return {{"t", r.t}, {"type", "compass"}, {"heading", r.heading}};
    }
    nlohmann::json operator()(const SonarRecord& r) const {
      return {{"t", r.t}, {"type", "sonar"}, {"frame", r.frame}};
    }
    nlohmann::json operator()(const GroundTruthRecord& r) const {
      return {{"t", r.t}, {"type", "gps"}, {"x", r.pose.x}, {"y", r.pose.y}, {"theta", r.pose.theta}};
    }
  };
  return std::visit(Visitor{}, record);
}

LogRecord from_json_line(const nlohmann::json& j) {
  const double t = j.at("t").get<double>();
  const std::string type = j.at("type").get<std::string>();
  if (type == "odom") return OdomRecord{t, j.at("v_x").get<double>()};
  if (type == "compass") return CompassRecord{t, j.at("heading").get<double>()};
  if (type == "sonar") return SonarRecord{t, j.at("frame").get<std::string>()};
  if (type == "gps") {
    return GroundTruthRecord{t, Pose2d(j.at("x").get<double>(), j.at("y").get<double>(), j.value("theta", 0.0))};
  }
  throw std::invalid_argument("unknown record type '" + type + "'");
}

}  // namespace

MessageLog read_log(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw IoError("cannot open " + jsonl.string());
  MessageLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      log.records.push_back(from_json_line(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw IoError(jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  log.validate();
  return log;
}

void write_log(const MessageLog& log, const std::filesystem::path& jsonl) {
  if (jsonl.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(jsonl.parent_path(), ec);
  }
  std::ofstream out(jsonl);
  if (!out) throw IoError("cannot write " + jsonl.string());
  for (const auto& record : log.records) out << to_json_line(record).dump() << '\n';
  if (!out) throw IoError("write failed: " + jsonl.string());
}

AcousticImage DirectoryFrameSource::load(const SonarRecord& record, const SonarFootprint& fp) const {
  return acoustic_from_gray8(read_pgm(root_ / record.frame), fp, record.t);
}

AcousticImage MemoryFrameSource::load(const SonarRecord& record, const SonarFootprint& fp) const {
  const auto it = frames_.find(record.frame);
  if (it == frames_.end()) throw IoError("no frame '" + record.frame + "'");
  AcousticImage img = it->second;
  if (!(img.footprint == fp)) throw DimensionMismatch("frame '" + record.frame + "' has a different footprint");
  img.timestamp = record.t;
  return img;
}

}  // namespace xvloc
