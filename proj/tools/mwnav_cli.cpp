#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mwnav/experiments.hpp"
#include "mwnav/io.hpp"
#include "mwnav/map_io.hpp"
#include "mwnav/metrics.hpp"

namespace fs = std::filesystem;
using namespace mwnav;

namespace {

struct GlobalArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "out";
  int jobs = 1;
  std::string map_file;
  std::string log_file;
};

HarnessConfig load_config(const GlobalArgs& args) {
  if (args.config.empty()) return parse_config("{}");
  return parse_config(read_text_file(args.config));
}

void add_common(CLI::App* cmd, GlobalArgs& args) {
  cmd->add_option("--config", args.config, "JSON configuration file");
  cmd->add_option("--seed", args.seed, "base RNG seed");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--jobs", args.jobs, "worker threads");
}

std::string fixed3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

int cmd_gen_map(const GlobalArgs& args) {
  const HarnessConfig cfg = load_config(args);
  const WorldMap map = generate_scenario(args.seed, cfg.world);
  fs::create_directories(args.out);
  const fs::path path = fs::path(args.out) / ("map_seed" + std::to_string(args.seed) + ".json");
  write_text_file(path, save_map(map));
  std::cout << "wrote " << path.string() << " (" << map.obstacles.size() << " obstacles, "
            << map.waypoints.size() << " waypoints)\n";
  return 0;
}

int cmd_run_episode(const GlobalArgs& args) {
  const HarnessConfig cfg = load_config(args);
  const WorldMap map = args.map_file.empty()
                           ? generate_scenario(args.seed, cfg.world)
                           : load_map(read_text_file(args.map_file));
  const EpisodeLog log = run_episode(map, cfg.flags, cfg.sim, args.seed);
  fs::create_directories(args.out);
  const fs::path csv = fs::path(args.out) / "episode.csv";
  save_episode(log, csv);
  write_text_file(fs::path(args.out) / "trajectory.svg", svg_trajectory(map, log));
  const MetricsReport m = compute_metrics(log);
  std::cout << "outcome=" << to_string(m.outcome) << " cte_rms=" << fixed3(m.cte_rms)
            << " j_lin=" << fixed3(m.j_lin) << " j_ang=" << fixed3(m.j_ang);
  if (m.traversal_time) std::cout << " traversal_s=" << fixed3(*m.traversal_time);
  std::cout << " compute_hz=" << fixed3(m.mean_compute_hz) << '\n';
  std::cout << "wrote " << csv.string() << '\n';
  return 0;
}

int cmd_ablation(const GlobalArgs& args) {
  const HarnessConfig cfg = load_config(args);
  const AblationResult res = run_ablation(cfg, args.jobs, args.out, args.seed);
  std::cout << "adaptive_resolution turn_correction adaptive_weights cte_rms j_ang success\n";
  for (const auto& r : res.rows)
    std::cout << r.adaptive_resolution << ' ' << r.turn_correction << ' ' << r.adaptive_weights
              << ' ' << fixed3(r.cte_rms) << ' ' << fixed3(r.j_ang) << ' '
              << fixed3(r.success_rate) << '\n';
  std::cout << "wrote " << (fs::path(args.out) / "ablation.csv").string() << '\n';
  return 0;
}

int cmd_sequencer_study(const GlobalArgs& args) {
  const HarnessConfig cfg = load_config(args);
  const SequencerStudyResult res = run_sequencer_study(cfg, args.jobs, args.out, args.seed);
  std::cout << "n_waypoints method gamma accuracy mean_elapsed_s mean_perms\n";
  for (const auto& r : res.summary)
    std::cout << r.n_waypoints << ' ' << to_string(r.method) << ' ' << fixed3(r.gamma) << ' '
              << fixed3(r.accuracy) << ' ' << fixed3(r.mean_elapsed_s) << ' '
              << fixed3(r.mean_perms) << '\n';
  std::cout << "wrote " << (fs::path(args.out) / "sequencer.csv").string() << '\n';
  return 0;
}

int cmd_metrics(const GlobalArgs& args) {
  const EpisodeLog log = load_episode(args.log_file);
  const MetricsReport m = compute_metrics(log);
  std::cout << "outcome=" << to_string(m.outcome) << '\n'
            << "cte_rms=" << fixed3(m.cte_rms) << '\n'
            << "j_lin=" << fixed3(m.j_lin) << '\n'
            << "j_ang=" << fixed3(m.j_ang) << '\n';
  if (m.traversal_time) std::cout << "traversal_s=" << fixed3(*m.traversal_time) << '\n';
  std::cout << "compute_hz=" << fixed3(m.mean_compute_hz) << '\n';
  return 0;
}

int cmd_plot(const GlobalArgs& args) {
  const EpisodeLog log = load_episode(args.log_file);
  const HarnessConfig cfg = load_config(args);
  const WorldMap map = args.map_file.empty()
                           ? generate_scenario(args.seed, cfg.world)
                           : load_map(read_text_file(args.map_file));
  fs::create_directories(args.out);
  const fs::path svg = fs::path(args.out) / "trajectory.svg";
  write_text_file(svg, svg_trajectory(map, log));
  std::cout << "wrote " << svg.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-waypoint grid navigation toolkit"};
  app.require_subcommand(1);
  GlobalArgs args;

  auto* gen_map = app.add_subcommand("gen-map", "generate a random map document");
  add_common(gen_map, args);

  auto* run_ep = app.add_subcommand("run-episode", "run one closed-loop episode");
  add_common(run_ep, args);
  run_ep->add_option("--map", args.map_file, "map JSON (otherwise generated from --seed)");

  auto* ablation = app.add_subcommand("ablation", "run the 8-way feature ablation");
  add_common(ablation, args);

  auto* seq = app.add_subcommand("sequencer-study", "sequencer accuracy and gamma sweeps");
  add_common(seq, args);

  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a saved episode log");
  add_common(metrics, args);
  metrics->add_option("--log", args.log_file, "episode CSV")->required();

  auto* plot = app.add_subcommand("plot", "render a trajectory overlay from a saved log");
  add_common(plot, args);
  plot->add_option("--log", args.log_file, "episode CSV")->required();
  plot->add_option("--map", args.map_file, "map JSON (otherwise generated from --seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? 0 : 1;
  }

  try {
    if (gen_map->parsed()) return cmd_gen_map(args);
    if (run_ep->parsed()) return cmd_run_episode(args);
    if (ablation->parsed()) return cmd_ablation(args);
    if (seq->parsed()) return cmd_sequencer_study(args);
    if (metrics->parsed()) return cmd_metrics(args);
    if (plot->parsed()) return cmd_plot(args);
  } catch (const Error& e) {
    // Configuration problems exit 1; everything else is a runtime failure.
    const std::string what = e.what();
    std::cerr << "error: " << what << '\n';
    return what.rfind("config", 0) == 0 ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
