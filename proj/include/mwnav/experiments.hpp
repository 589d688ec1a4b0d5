#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>
#include <vector>

#include "mwnav/io.hpp"
#include "mwnav/map_io.hpp"
#include "mwnav/metrics.hpp"
#include "mwnav/sequencer.hpp"
#include "mwnav/simulator.hpp"

namespace mwnav {

inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Experiment 1: the 8-way feature ablation grid.

struct AblationRow {
  bool adaptive_resolution = false;
  bool turn_correction = false;
  bool adaptive_weights = false;
  double cte_rms = 0.0;
  double j_lin = 0.0;
  double j_ang = 0.0;
  double traversal_s = 0.0;  // mean over successful episodes; 0 if none
  double compute_hz = 0.0;
  double success_rate = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;                 // 8 rows, flag-ordered
  std::vector<std::vector<MetricsReport>> per_episode;  // [combo][map]
};

inline AblationResult run_ablation(const HarnessConfig& cfg, int jobs = 1,
                                   const std::filesystem::path& out_dir = {},
                                   std::uint64_t episode_seed = 0) {
  const auto& exp = cfg.experiment;
  if (exp.map_seeds.empty()) throw Error("run_ablation: empty map seed list");

  ScenarioParams world = cfg.world;
  world.width = exp.grid_width;
  world.height = exp.grid_height;
  world.min_obstacles = exp.min_obstacles;
  world.max_obstacles = exp.max_obstacles;
  world.n_waypoints = exp.waypoint_counts.empty() ? cfg.world.n_waypoints
                                                  : exp.waypoint_counts.front();

  std::vector<WorldMap> maps;
  for (auto s : exp.map_seeds) maps.push_back(generate_scenario(s, world));

  const std::size_t n_maps = maps.size();
  AblationResult result;
  result.per_episode.assign(8, std::vector<MetricsReport>(n_maps));
  std::vector<EpisodeLog> logs(8 * n_maps);

  parallel_for(8 * n_maps, jobs, [&](std::size_t k) {
    const std::size_t combo = k / n_maps;
    const std::size_t mi = k % n_maps;
    FeatureFlags flags = cfg.flags;
    flags.adaptive_resolution = (combo & 4) != 0;
    flags.turn_correction = (combo & 2) != 0;
    flags.adaptive_weights = (combo & 1) != 0;
    EpisodeLog log = run_episode(maps[mi], flags, cfg.sim, episode_seed + maps[mi].seed);
    result.per_episode[combo][mi] = compute_metrics(log);
    logs[k] = std::move(log);
  });

  for (std::size_t combo = 0; combo < 8; ++combo) {
    AblationRow row;
    row.adaptive_resolution = (combo & 4) != 0;
    row.turn_correction = (combo & 2) != 0;
    row.adaptive_weights = (combo & 1) != 0;
    double n_success = 0;
    for (const auto& m : result.per_episode[combo]) {
      row.cte_rms += m.cte_rms;
      row.j_lin += m.j_lin;
      row.j_ang += m.j_ang;
      row.compute_hz += m.mean_compute_hz;
      if (m.traversal_time) {
        row.traversal_s += *m.traversal_time;
        n_success += 1;
      }
    }
    const double n = static_cast<double>(n_maps);
    row.cte_rms /= n;
    row.j_lin /= n;
    row.j_ang /= n;
    row.compute_hz /= n;
    if (n_success > 0) row.traversal_s /= n_success;
    row.success_rate = n_success / n;
    result.rows.push_back(row);
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    csv << "adaptive_resolution,turn_correction,adaptive_weights,cte_rms,j_lin,j_ang,"
           "traversal_s,compute_hz,success_rate\n";
    for (const auto& r : result.rows)
      csv << (r.adaptive_resolution ? 1 : 0) << ',' << (r.turn_correction ? 1 : 0) << ','
          << (r.adaptive_weights ? 1 : 0) << ',' << format_full(r.cte_rms) << ','
          << format_full(r.j_lin) << ',' << format_full(r.j_ang) << ','
          << format_full(r.traversal_s) << ',' << format_full(r.compute_hz) << ','
          << format_full(r.success_rate) << '\n';
    write_text_file(out_dir / "ablation.csv", csv.str());
    for (std::size_t k = 0; k < logs.size(); ++k) {
      const std::size_t combo = k / n_maps;
      std::ostringstream name;
      name << "episode_c" << combo << "_seed" << maps[k % n_maps].seed << ".csv";
      save_episode(logs[k], out_dir / name.str());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Experiment 2: sequencer accuracy and gamma sweeps.

struct SequencerSummaryRow {
  int n_waypoints = 0;
  SequencerMethod method = SequencerMethod::BCP;
  double gamma = 1.0;
  double accuracy = 0.0;
  double mean_elapsed_s = 0.0;
  double mean_perms = 0.0;
};

struct RetainedOptimalRow {
  int n_waypoints = 0;
  double gamma = 1.0;
  double mean_optimal_count = 0.0;  // optimal-cost tours in the retained slice
};

struct SequencerStudyResult {
  std::vector<SequencerSummaryRow> summary;
  std::vector<RetainedOptimalRow> retained;
  std::vector<AccuracyTrialRow> trials;
};

/// How many retained permutations at this gamma reach the exhaustive optimum
/// (the first sequencing decision of the instance).
inline std::uint64_t count_optimal_in_slice(const Vec2& current,
                                            const std::vector<Vec2>& intermediates,
                                            const Vec2& goal, SearchFraction gamma,
                                            std::uint64_t seed) {
  const std::size_t m = intermediates.size();
  detail::check_enumeration_budget(m);
  const double best = bcp_next(current, intermediates, goal).tour_cost;
  const std::uint64_t total = detail::factorial(m);
  const std::uint64_t kept = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::ceil(gamma.gamma * static_cast<double>(total))));
  std::vector<std::uint32_t> codes(total);
  std::iota(codes.begin(), codes.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::size_t i = total - 1; i > 0; --i)
    std::swap(codes[i], codes[static_cast<std::size_t>(uniform_u64(rng, 0, i))]);
  std::vector<int> perm;
  std::uint64_t count = 0;
  for (std::uint64_t k = 0; k < kept; ++k) {
    detail::decode_permutation(codes[k], m, perm);
    double cost = euclidean_dist(current, intermediates[perm[0]]);
    for (std::size_t i = 0; i + 1 < m; ++i)
      cost += euclidean_dist(intermediates[perm[i]], intermediates[perm[i + 1]]);
    cost += euclidean_dist(intermediates[perm[m - 1]], goal);
    if (std::abs(cost - best) <= kCostMatchTol) ++count;
  }
  return count;
}

inline SequencerStudyResult run_sequencer_study(const HarnessConfig& cfg, int jobs = 1,
                                                const std::filesystem::path& out_dir = {},
                                                std::uint64_t seed = 12345) {
  const auto& exp = cfg.experiment;
  if (exp.map_seeds.empty()) throw Error("run_sequencer_study: empty map seed list");
  SequencerStudyResult out;

  for (int n_wp : exp.waypoint_counts) {
    if (static_cast<std::size_t>(n_wp) > detail::kMaxFreeIntermediates) continue;  // skipped row
    ScenarioParams world = cfg.world;
    world.width = exp.grid_width;
    world.height = exp.grid_height;
    world.min_obstacles = exp.min_obstacles;
    world.max_obstacles = exp.max_obstacles;
    world.n_waypoints = n_wp;
    std::vector<WorldMap> maps;
    for (auto s : exp.map_seeds) maps.push_back(generate_scenario(s, world));

    auto record = [&](SequencerMethod method, SearchFraction gamma) {
      const AccuracyStats st = accuracy_trial(maps, method, gamma, exp.repeats, seed);
      SequencerSummaryRow row;
      row.n_waypoints = n_wp;
      row.method = method;
      row.gamma = gamma.gamma;
      row.accuracy = st.accuracy;
      row.mean_elapsed_s = st.mean_elapsed;
      row.mean_perms = st.mean_perms;
      out.summary.push_back(row);
      out.trials.insert(out.trials.end(), st.rows.begin(), st.rows.end());
    };

    record(SequencerMethod::BCP, {1.0});
    record(SequencerMethod::GREEDY, {1.0});
    for (double g : exp.gammas) record(SequencerMethod::PROBABILISTIC, {g});

    std::vector<RetainedOptimalRow> retained(exp.gammas.size());
    parallel_for(exp.gammas.size(), jobs, [&](std::size_t gi) {
      RetainedOptimalRow row;
      row.n_waypoints = n_wp;
      row.gamma = exp.gammas[gi];
      double sum = 0.0;
      std::mt19937_64 rng(seed + gi);
      for (const auto& map : maps) {
        std::vector<Vec2> inter;
        for (const auto& w : map.waypoints) inter.push_back(w.center());
        for (int r = 0; r < exp.repeats; ++r)
          sum += static_cast<double>(count_optimal_in_slice(
              map.start.center(), inter, map.goal.center(), {exp.gammas[gi]}, rng()));
      }
      row.mean_optimal_count = sum / static_cast<double>(maps.size() * exp.repeats);
      retained[gi] = row;
    });
    out.retained.insert(out.retained.end(), retained.begin(), retained.end());
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ostringstream trials;
    trials << "map_seed,method,gamma,repeat,tour_cost,best_cost,match,elapsed_s,perms_evaluated\n";
    for (const auto& r : out.trials)
      trials << r.map_seed << ',' << to_string(r.method) << ',' << format_full(r.gamma) << ','
             << r.repeat << ',' << format_full(r.tour_cost) << ',' << format_full(r.best_cost)
             << ',' << (r.match ? 1 : 0) << ',' << format_full(r.elapsed_s) << ','
             << r.perms_evaluated << '\n';
    write_text_file(out_dir / "sequencer.csv", trials.str());

    std::ostringstream summary;
    summary << "n_waypoints,method,gamma,accuracy,mean_elapsed_s,mean_perms\n";
    for (const auto& r : out.summary)
      summary << r.n_waypoints << ',' << to_string(r.method) << ',' << format_full(r.gamma)
              << ',' << format_full(r.accuracy) << ',' << format_full(r.mean_elapsed_s) << ','
              << format_full(r.mean_perms) << '\n';
    write_text_file(out_dir / "sequencer_summary.csv", summary.str());

    std::ostringstream ret;
    ret << "n_waypoints,gamma,mean_optimal_count\n";
    for (const auto& r : out.retained)
      ret << r.n_waypoints << ',' << format_full(r.gamma) << ','
          << format_full(r.mean_optimal_count) << '\n';
    write_text_file(out_dir / "retained_optimal.csv", ret.str());

    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    std::vector<SvgSeries> acc_series, ret_series;
    std::size_t ci = 0;
    for (int n_wp : exp.waypoint_counts) {
      SvgSeries acc, retained_s;
      acc.color = retained_s.color = colors[ci % 6];
      acc.label = retained_s.label = std::to_string(n_wp) + " waypoints";
      ++ci;
      for (const auto& r : out.summary)
        if (r.n_waypoints == n_wp && r.method == SequencerMethod::PROBABILISTIC)
          acc.points.push_back({r.gamma, r.accuracy});
      for (const auto& r : out.retained)
        if (r.n_waypoints == n_wp) retained_s.points.push_back({r.gamma, r.mean_optimal_count});
      if (!acc.points.empty()) acc_series.push_back(acc);
      if (!retained_s.points.empty()) ret_series.push_back(retained_s);
    }
    write_text_file(out_dir / "accuracy_vs_gamma.svg",
                    svg_line_chart(acc_series, "Probabilistic accuracy vs gamma", "gamma",
                                   "accuracy"));
    write_text_file(out_dir / "retained_optimal_vs_gamma.svg",
                    svg_line_chart(ret_series, "Optimal-cost tours in retained slice", "gamma",
                                   "mean count"));
  }
  return out;
}

}  // namespace mwnav
