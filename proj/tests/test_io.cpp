#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mwnav/io.hpp"

using namespace mwnav;

namespace {

EpisodeLog sample_log() {
  EpisodeLog log;
  log.step = 0.1;
  log.outcome = Outcome::SUCCESS;
  for (int i = 0; i < 3; ++i) {
    EpisodeSample s;
    s.t = i * 0.1;
    s.state = {0.1 * i, 0.2 * i, 0.05 * i};
    s.control = {0.5, 0.01 * i};
    s.wheel = {4.9, 5.1};
    s.reference = {0.1 * i, 0.2 * i, 0.0};
    s.iterations = 3 + i;
    s.converged = i != 1;
    s.cost = 0.125 * i;
    s.defect = 1e-9;
    s.profile = i == 2 ? ProfileLabel::TURN : ProfileLabel::STRAIGHT;
    s.compute_s = 0.001;
    s.path_index = 0;
    log.samples.push_back(s);
  }
  log.events.push_back({0.2, EventKind::GOAL_REACHED, {2, 2}});
  PosePath p;
  p.points = {{0.5, 0.5, 0.0}, {1.0, 0.5, 0.0}, {1.5, 0.5, M_PI / 2}};
  p.turn_indices = {2};
  log.paths.push_back(p);
  return log;
}

}  // namespace

TEST_CASE("format_full round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, M_PI, -2.5e-17, 123456.789}) {
    CHECK(std::stod(format_full(v)) == v);
  }
  CHECK(format_full(1.0) == "1");
}

TEST_CASE("episode_csv header and shape") {
  const std::string csv = episode_csv(sample_log());
  CHECK(csv.rfind("t,x,y,yaw,v,omega,vL,vR,ref_x,ref_y,ref_yaw,iterations,converged,cost,defect,"
                  "profile,compute_s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
}

TEST_CASE("save_episode / load_episode round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mwnav_io_test";
  std::filesystem::create_directories(dir);
  const auto csv = dir / "ep.csv";
  const EpisodeLog log = sample_log();
  save_episode(log, csv);
  const EpisodeLog back = load_episode(csv);

  REQUIRE(back.samples.size() == log.samples.size());
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    CHECK(back.samples[i].state.x == log.samples[i].state.x);
    CHECK(back.samples[i].control.omega == log.samples[i].control.omega);
    CHECK(back.samples[i].converged == log.samples[i].converged);
    CHECK(back.samples[i].profile == log.samples[i].profile);
    CHECK(back.samples[i].path_index == log.samples[i].path_index);
  }
  CHECK(back.outcome == Outcome::SUCCESS);
  CHECK(back.step == 0.1);
  REQUIRE(back.events.size() == 1);
  CHECK(back.events[0].kind == EventKind::GOAL_REACHED);
  CHECK(back.events[0].cell == GridCell{2, 2});
  REQUIRE(back.paths.size() == 1);
  CHECK(back.paths[0].points.size() == 3);
  CHECK(back.paths[0].turn_indices == std::vector<std::size_t>{2});
  CHECK(episode_csv(back) == episode_csv(log));

  std::filesystem::remove_all(dir);
}

TEST_CASE("load_episode rejects malformed rows") {
  const auto dir = std::filesystem::temp_directory_path() / "mwnav_io_bad";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "bad.csv", "t,x\n1,2\n");
  CHECK_THROWS_AS(load_episode(dir / "bad.csv"), Error);
  CHECK_THROWS_AS(load_episode(dir / "missing.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pose_path_csv") {
  PosePath p;
  p.points = {{0.5, 0.5, 0.0}, {1.5, 0.5, 0.0}};
  p.turn_indices = {1};
  const std::string csv = pose_path_csv(p);
  CHECK(csv.rfind("idx,x,y,yaw_ref,is_turn\n", 0) == 0);
  CHECK(csv.find("0,0.5,0.5,0,0\n") != std::string::npos);
  CHECK(csv.find("1,1.5,0.5,0,1\n") != std::string::npos);
}

TEST_CASE("parse_config defaults") {
  const HarnessConfig cfg = parse_config("{}");
  CHECK(cfg.world.width == 10);
  CHECK(cfg.sim.mpc.horizon == 10);
  CHECK(cfg.sim.mpc.step == 0.1);
  CHECK(cfg.sim.sensor.radius == 2.5);
  CHECK(cfg.sim.arrival.position_tolerance == 0.15);
  CHECK(cfg.flags.sequencer_method == SequencerMethod::BCP);
  CHECK(cfg.experiment.map_seeds.size() == 10);
}

TEST_CASE("parse_config overrides") {
  const HarnessConfig cfg = parse_config(R"({
    "world": {"width": 12, "n_waypoints": 4},
    "sensor": {"radius": 3.0},
    "simulator": {"timeout": 60, "measure_timing": false},
    "mpc": {"horizon": 6, "v_max": 0.8,
            "profiles": {"TURN": {"q": [1, 2, 9], "r": [0.7, 0.01]}},
            "solver": {"max_iterations": 50}},
    "flags": {"adaptive_weights": true, "sequencer_method": "probabilistic", "gamma": 0.25},
    "experiment": {"experiment": "sequencer", "repeats": 3, "gammas": [0.5, 1.0]}
  })");
  CHECK(cfg.world.width == 12);
  CHECK(cfg.world.n_waypoints == 4);
  CHECK(cfg.sim.sensor.radius == 3.0);
  CHECK(cfg.sim.timeout == 60.0);
  CHECK_FALSE(cfg.sim.measure_timing);
  CHECK(cfg.sim.mpc.horizon == 6);
  CHECK(cfg.sim.mpc.v_max == 0.8);
  CHECK(cfg.sim.mpc.turn_profile.q[2] == 9.0);
  CHECK(cfg.sim.mpc.turn_profile.r[1] == 0.01);
  CHECK(cfg.sim.mpc.solver.max_iterations == 50);
  CHECK(cfg.flags.adaptive_weights);
  CHECK(cfg.flags.sequencer_method == SequencerMethod::PROBABILISTIC);
  CHECK(cfg.flags.gamma.gamma == 0.25);
  CHECK(cfg.experiment.experiment == ExperimentConfig::Kind::SEQUENCER);
  CHECK(cfg.experiment.repeats == 3);
  CHECK(cfg.experiment.gammas == std::vector<double>{0.5, 1.0});
}

TEST_CASE("parse_config diagnostics") {
  CHECK_THROWS_WITH(parse_config("not json"),
                    Catch::Matchers::ContainsSubstring("malformed JSON"));
  CHECK_THROWS_WITH(parse_config(R"({"flags": {"sequencer_method": "astar"}})"),
                    Catch::Matchers::ContainsSubstring("sequencer_method"));
  CHECK_THROWS_WITH(parse_config(R"({"experiment": {"experiment": "nope"}})"),
                    Catch::Matchers::ContainsSubstring("experiment"));
}

TEST_CASE("svg emitters produce well-formed documents") {
  SvgSeries s;
  s.points = {{0, 0}, {1, 1}, {2, 0.5}};
  s.label = "series";
  const std::string chart = svg_line_chart({s}, "title", "x", "y");
  CHECK(chart.rfind("<svg", 0) == 0);
  CHECK(chart.find("</svg>") != std::string::npos);
  CHECK(chart.find("polyline") != std::string::npos);

  ScenarioParams p;
  p.n_waypoints = 2;
  const WorldMap map = generate_scenario(3, p);
  const std::string traj = svg_trajectory(map, sample_log());
  CHECK(traj.rfind("<svg", 0) == 0);
  CHECK(traj.find("</svg>") != std::string::npos);
  CHECK(std::count(traj.begin(), traj.end(), '<') ==
        std::count(traj.begin(), traj.end(), '>'));
}
