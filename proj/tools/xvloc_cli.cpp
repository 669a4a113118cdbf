// Command-line front end: world generation, simulation, localization replay,
// evaluation and sonar preprocessing.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "xvloc/errors.hpp"
#include "xvloc/filter.hpp"
#include "xvloc/geomap.hpp"
#include "xvloc/harness.hpp"
#include "xvloc/matcher.hpp"
#include "xvloc/message_log.hpp"
#include "xvloc/simulator.hpp"

namespace fs = std::filesystem;
using namespace xvloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

template <typename T>
T read_config(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void cmd_gen_world(const fs::path& spec_path, const fs::path& out) {
  const auto spec = read_config<WorldSpec>(spec_path);
  save_map(generate_world(spec), out);
  std::cout << "wrote " << (out / "map.pgm").string() << '\n';
}

void cmd_simulate(const fs::path& world, const fs::path& traj, const fs::path& noise_path, std::uint64_t seed,
                  const fs::path& out) {
  const SemanticMap map = load_map(world);
  const auto run_spec = read_config<RunSpec>(traj);
  const NoiseSpec noise = noise_path.empty() ? NoiseSpec{} : read_config<NoiseSpec>(noise_path);
  const SimulatedRun run = simulate_run(map, run_spec, noise, seed);
  save_run(run, out);
  std::cout << "wrote " << run.log.records.size() << " records and " << run.frames.size() << " frames to "
            << out.string() << '\n';
}

FilterConfig load_filter_config(const fs::path& path) {
  if (path.empty()) return FilterConfig{};
  return read_config<FilterConfig>(path);
}

void cmd_localize(const fs::path& log_dir, const fs::path& map_dir, const fs::path& config, const std::string& scorer_name,
                  const fs::path& out, double init_delay, int batch_length) {
  const FilterConfig cfg = load_filter_config(config);
  const auto scorer = make_scorer(scorer_name);
  const SemanticMap map = load_map(map_dir);
  const MessageLog log = read_log(log_file_in(log_dir));
  LocalizeOptions options;
  options.init_delay_s = init_delay;
  options.batch_length = batch_length;
  const RunResult result = run_localization(log, DirectoryFrameSource(log_dir), map, cfg, *scorer, options);
  write_result_csv(result, out);
  std::cout << "processed " << result.frames_seen << " sonar frames, " << result.updates_applied
            << " observation updates; wrote " << out.string() << '\n';
}

void cmd_evaluate(const fs::path& result_path, const fs::path& out) {
  const Metrics m = evaluate(read_result_csv(result_path));
  write_metrics_csv(m, out);
  std::cout << "pf mean " << m.pf_mean << " m, dead reckoning mean " << m.baseline_mean << " m, pf better on "
            << 100.0 * m.pf_better_fraction << "% of steps\n";
}

void cmd_preprocess(const fs::path& log_dir, const fs::path& config, const fs::path& out, int batch_length) {
  const FilterConfig cfg = load_filter_config(config);
  const MessageLog log = read_log(log_file_in(log_dir));
  LocalizeOptions options;
  options.batch_length = batch_length;
  preprocess_sonar(log, DirectoryFrameSource(log_dir), cfg.footprint, options, out);
  std::cout << "wrote enhanced frames to " << out.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sonar-to-aerial-map particle filter localization"};
  app.require_subcommand(1);

  fs::path spec, out, world, traj, noise, log_dir, map_dir, config, result;
  std::uint64_t seed = 0;
  std::string scorer = "baseline";
  double init_delay = 0.0;
  int batch_length = LocalizeOptions{}.batch_length;

  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic marina map");
  gen->add_option("--spec", spec, "World spec JSON")->required();
  gen->add_option("--out", out, "Output map directory")->required();

  auto* sim = app.add_subcommand("simulate", "Simulate a run and write a message log");
  sim->add_option("--world", world, "Map directory")->required();
  sim->add_option("--traj", traj, "Trajectory JSON")->required();
  sim->add_option("--noise", noise, "Noise JSON");
  sim->add_option("--seed", seed, "Random seed");
  sim->add_option("--out", out, "Output log directory")->required();

  auto* loc = app.add_subcommand("localize", "Run the particle filter over a log");
  loc->add_option("--log", log_dir, "Log directory")->required();
  loc->add_option("--map", map_dir, "Map directory")->required();
  loc->add_option("--config", config, "Filter config JSON");
  loc->add_option("--scorer", scorer, "Scorer")->check(CLI::IsMember({"baseline", "oracle"}));
  loc->add_option("--out", out, "Result CSV")->required();
  loc->add_option("--init-delay", init_delay, "Seconds of controls and frames to drop at start")
      ->check(CLI::NonNegativeNumber);
  loc->add_option("--batch-length", batch_length, "Sonar enhancement window")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("evaluate", "Compute error metrics from a result CSV");
  eval->add_option("--result", result, "Result CSV")->required();
  eval->add_option("--out", out, "Metrics CSV")->required();

  auto* pre = app.add_subcommand("preprocess-sonar", "Write enhanced sonar frames");
  pre->add_option("--log", log_dir, "Log directory")->required();
  pre->add_option("--config", config, "Filter config JSON (footprint)");
  pre->add_option("--out", out, "Output directory")->required();
  pre->add_option("--batch-length", batch_length, "Sonar enhancement window")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) cmd_gen_world(spec, out);
    else if (*sim) cmd_simulate(world, traj, noise, seed, out);
    else if (*loc) cmd_localize(log_dir, map_dir, config, scorer, out, init_delay, batch_length);
    else if (*eval) cmd_evaluate(result, out);
    else if (*pre) cmd_preprocess(log_dir, config, out, batch_length);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
