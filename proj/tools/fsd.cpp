#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fsd/harness/config.hpp"
#include "fsd/harness/metrics.hpp"
#include "fsd/harness/plots.hpp"
#include "fsd/harness/runner.hpp"
#include "fsd/sim/track.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

namespace fs = std::filesystem;
using namespace fsd;

int gen_track(std::uint64_t seed, double length, const std::string& out) {
  harness::Scenario sc;
  sc.track.seed = seed;
  sc.track.length = length;
  harness::validate(sc);
  const sim::Track track = sim::generate_track(seed, length, sc.track.width, sc.track.cone_spacing);
  sim::save_track_csv(track, out);
  std::cout << "track: " << track.left.size() + track.right.size() << " cones, " << track.length() << " m -> " << out
            << '\n';
  return kExitOk;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::int64_t> laps;
  std::string out;
};

int run(const RunArgs& args) {
  harness::Scenario sc = harness::load_config(args.config);
  if (args.seed) sc.run.seed = *args.seed;
  if (args.laps) sc.run.laps = *args.laps;
  if (args.mode && !harness::parse_mode(*args.mode, sc.run.mode)) {
    throw harness::ValidationError({"run.mode"}, "expected slam, localization or full");
  }
  harness::validate(sc);

  fs::create_directories(args.out);
  const harness::RunResult result = harness::run_scenario(sc);
  const fs::path out(args.out);
  harness::save_jsonl(result.log, out / "runlog.jsonl");
  sim::save_track_csv(result.track, (out / "track.csv").string());
  if (result.map) slam::save_map_csv(*result.map, (out / "map.csv").string());
  const harness::Metrics metrics = harness::evaluate(result.log, result.track);
  harness::save_metrics(metrics, (out / "metrics.json").string());

  std::cout << "events: " << result.log.size() << ", laps: " << metrics.laps_completed;
  if (metrics.ate_rmse) std::cout << ", ate: " << *metrics.ate_rmse << " m";
  std::cout << '\n';
  if (!result.ok()) {
    std::cerr << "run failed: " << *result.failure << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int eval(const std::string& log_path, const std::string& track_path, const std::string& out) {
  const harness::RunLog log = harness::load_jsonl(log_path);
  const sim::Track track = sim::load_track_csv(track_path);
  harness::save_metrics(harness::evaluate(log, track), out);
  return kExitOk;
}

int plot(const std::string& log_path, const std::string& out) {
  harness::emit_plots(harness::load_jsonl(log_path), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cone-track perception and state-estimation simulator"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  double length = 300.0;
  std::string out;
  auto* gen = app.add_subcommand("gen-track", "generate a seeded closed track and write it as CSV");
  gen->add_option("--seed", seed, "track seed");
  gen->add_option("--length", length, "target lap length (m)");
  gen->add_option("--out", out, "output CSV")->required();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and write the run log, track, map and metrics");
  run_cmd->add_option("--config", run_args.config, "scenario TOML")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run_args.seed, "override run.seed");
  run_cmd->add_option("--mode", run_args.mode, "override run.mode (slam|localization|full)");
  run_cmd->add_option("--laps", run_args.laps, "override run.laps");
  run_cmd->add_option("--out", run_args.out, "output directory")->required();

  std::string log_path, track_path;
  auto* eval_cmd = app.add_subcommand("eval", "compute metrics of a run log against a track");
  eval_cmd->add_option("--log", log_path, "run log (JSON Lines)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--track", track_path, "track CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out, "metrics JSON")->required();

  auto* plot_cmd = app.add_subcommand("plot", "write plot CSVs and an SVG for a run log");
  plot_cmd->add_option("--log", log_path, "run log (JSON Lines)")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", out, "output directory")->required();

  auto* keys_cmd = app.add_subcommand("keys", "print every scenario key with its default and range");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*gen) return gen_track(seed, length, out);
    if (*run_cmd) return run(run_args);
    if (*eval_cmd) return eval(log_path, track_path, out);
    if (*plot_cmd) return plot(log_path, out);
    if (*keys_cmd) {
      harness::write_key_reference(std::cout);
      return kExitOk;
    }
  } catch (const harness::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInvalid;
}
