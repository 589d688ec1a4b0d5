#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwnav/metrics.hpp"
#include "mwnav/simulator.hpp"

namespace mwnav {

inline std::string format_full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Episode log serialization: CSV samples plus a JSON sidecar carrying events,
// outcome and the reference paths needed to recompute metrics offline.

inline std::string episode_csv(const EpisodeLog& log) {
  std::ostringstream os;
  os << "t,x,y,yaw,v,omega,vL,vR,ref_x,ref_y,ref_yaw,iterations,converged,cost,defect,profile,"
        "compute_s\n";
  for (const auto& s : log.samples) {
    os << format_full(s.t) << ',' << format_full(s.state.x) << ',' << format_full(s.state.y)
       << ',' << format_full(s.state.yaw) << ',' << format_full(s.control.v) << ','
       << format_full(s.control.omega) << ',' << format_full(s.wheel.v_left) << ','
       << format_full(s.wheel.v_right) << ',' << format_full(s.reference.x) << ','
       << format_full(s.reference.y) << ',' << format_full(s.reference.yaw_ref) << ','
       << s.iterations << ',' << (s.converged ? 1 : 0) << ',' << format_full(s.cost) << ','
       << format_full(s.defect) << ',' << to_string(s.profile) << ','
       << format_full(s.compute_s) << '\n';
  }
  return os.str();
}

inline std::string episode_sidecar_json(const EpisodeLog& log) {
  nlohmann::ordered_json j;
  j["outcome"] = to_string(log.outcome);
  j["step"] = log.step;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : log.events)
    j["events"].push_back({{"t", e.t}, {"kind", to_string(e.kind)},
                           {"cell", {e.cell.row, e.cell.col}}});
  j["path_index"] = nlohmann::ordered_json::array();
  for (const auto& s : log.samples) j["path_index"].push_back(s.path_index);
  j["paths"] = nlohmann::ordered_json::array();
  for (const auto& p : log.paths) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& q : p.points) pts.push_back({q.x, q.y, q.yaw_ref});
    j["paths"].push_back({{"points", pts}, {"turn_indices", p.turn_indices}});
  }
  return j.dump() + "\n";
}

inline void save_episode(const EpisodeLog& log, const std::filesystem::path& csv_path) {
  write_text_file(csv_path, episode_csv(log));
  std::filesystem::path sidecar = csv_path;
  sidecar.replace_extension(".events.json");
  write_text_file(sidecar, episode_sidecar_json(log));
}

inline EpisodeLog load_episode(const std::filesystem::path& csv_path) {
  EpisodeLog log;
  std::istringstream in(read_text_file(csv_path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 17) throw Error("load_episode: malformed row: " + line);
    EpisodeSample s;
    s.t = std::stod(f[0]);
    s.state = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
    s.control = {std::stod(f[4]), std::stod(f[5])};
    s.wheel = {std::stod(f[6]), std::stod(f[7])};
    s.reference = {std::stod(f[8]), std::stod(f[9]), std::stod(f[10])};
    s.iterations = std::stoi(f[11]);
    s.converged = f[12] == "1";
    s.cost = std::stod(f[13]);
    s.defect = std::stod(f[14]);
    s.profile = f[15] == "turn" ? ProfileLabel::TURN : ProfileLabel::STRAIGHT;
    s.compute_s = std::stod(f[16]);
    log.samples.push_back(s);
  }

  std::filesystem::path sidecar = csv_path;
  sidecar.replace_extension(".events.json");
  nlohmann::json j = nlohmann::json::parse(read_text_file(sidecar));
  const std::string outcome = j.at("outcome").get<std::string>();
  log.outcome = outcome == "success"   ? Outcome::SUCCESS
                : outcome == "collision" ? Outcome::COLLISION
                                         : Outcome::TIMEOUT;
  log.step = j.at("step").get<double>();
  for (const auto& e : j.at("events")) {
    EpisodeEvent ev;
    ev.t = e.at("t").get<double>();
    const std::string kind = e.at("kind").get<std::string>();
    if (kind == "waypoint_reached") ev.kind = EventKind::WAYPOINT_REACHED;
    else if (kind == "obstacle_detected") ev.kind = EventKind::OBSTACLE_DETECTED;
    else if (kind == "replanned") ev.kind = EventKind::REPLANNED;
    else if (kind == "collision") ev.kind = EventKind::COLLISION;
    else if (kind == "goal_reached") ev.kind = EventKind::GOAL_REACHED;
    else ev.kind = EventKind::TIMEOUT;
    ev.cell = {e.at("cell")[0].get<int>(), e.at("cell")[1].get<int>()};
    log.events.push_back(ev);
  }
  const auto& idx = j.at("path_index");
  for (std::size_t i = 0; i < log.samples.size() && i < idx.size(); ++i)
    log.samples[i].path_index = idx[i].get<int>();
  for (const auto& p : j.at("paths")) {
    PosePath path;
    for (const auto& q : p.at("points"))
      path.points.push_back({q[0].get<double>(), q[1].get<double>(), q[2].get<double>()});
    for (const auto& t : p.at("turn_indices")) path.turn_indices.push_back(t.get<std::size_t>());
    log.paths.push_back(path);
  }
  return log;
}

inline std::string pose_path_csv(const PosePath& path) {
  std::ostringstream os;
  os << "idx,x,y,yaw_ref,is_turn\n";
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const bool turn =
        std::find(path.turn_indices.begin(), path.turn_indices.end(), i) != path.turn_indices.end();
    os << i << ',' << format_full(path.points[i].x) << ',' << format_full(path.points[i].y) << ','
       << format_full(path.points[i].yaw_ref) << ',' << (turn ? 1 : 0) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Configuration file

struct ExperimentConfig {
  enum class Kind { ABLATION, SEQUENCER };
  Kind experiment = Kind::ABLATION;
  std::vector<std::uint64_t> map_seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int grid_width = 10;
  int grid_height = 10;
  int min_obstacles = 25;
  int max_obstacles = 35;
  std::vector<int> waypoint_counts{8};
  std::vector<double> gammas{0.1, 0.25, 0.5, 0.75, 1.0};
  int repeats = 10;
  std::string output_dir = "out";
};

struct HarnessConfig {
  ScenarioParams world;
  SimulationConfig sim;
  // Production default: all features on. FeatureFlags itself defaults to the
  // all-off ablation baseline; ablation runs enumerate combinations anyway.
  FeatureFlags flags{true, true, true};
  ExperimentConfig experiment;
};

inline void parse_weight_profile(const nlohmann::json& j, WeightProfile& p) {
  if (j.contains("q")) for (int i = 0; i < 3; ++i) p.q[i] = j["q"][i].get<double>();
  if (j.contains("r")) for (int i = 0; i < 2; ++i) p.r[i] = j["r"][i].get<double>();
}

inline HarnessConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("config: malformed JSON: ") + e.what());
  }
  HarnessConfig cfg;
  auto get = [](const nlohmann::json& o, const char* k, auto& dst) {
    if (o.contains(k)) dst = o.at(k).get<std::decay_t<decltype(dst)>>();
  };

  if (j.contains("world")) {
    const auto& w = j["world"];
    get(w, "width", cfg.world.width);
    get(w, "height", cfg.world.height);
    get(w, "min_obstacles", cfg.world.min_obstacles);
    get(w, "max_obstacles", cfg.world.max_obstacles);
    get(w, "n_waypoints", cfg.world.n_waypoints);
    get(w, "retry_budget", cfg.world.retry_budget);
  }
  if (j.contains("sensor")) get(j["sensor"], "radius", cfg.sim.sensor.radius);
  if (j.contains("arrival"))
    get(j["arrival"], "position_tolerance", cfg.sim.arrival.position_tolerance);
  if (j.contains("simulator")) {
    const auto& s = j["simulator"];
    get(s, "timeout", cfg.sim.timeout);
    get(s, "robot_radius", cfg.sim.robot_radius);
    get(s, "measure_timing", cfg.sim.measure_timing);
    if (s.contains("fixed_resolution"))
      cfg.sim.fixed_resolution.r_straight = cfg.sim.fixed_resolution.r_turn =
          s["fixed_resolution"].get<int>();
    if (s.contains("adaptive_resolution")) {
      const auto& a = s["adaptive_resolution"];
      get(a, "r_straight", cfg.sim.adaptive_resolution.r_straight);
      get(a, "r_turn", cfg.sim.adaptive_resolution.r_turn);
      get(a, "turn_window", cfg.sim.adaptive_resolution.turn_window);
    }
    if (s.contains("turn_correction"))
      get(s["turn_correction"], "threshold", cfg.sim.turn_correction.threshold);
  }
  if (j.contains("mpc")) {
    const auto& m = j["mpc"];
    auto& c = cfg.sim.mpc;
    get(m, "horizon", c.horizon);
    get(m, "step", c.step);
    get(m, "v_min", c.v_min);
    get(m, "v_max", c.v_max);
    get(m, "omega_max", c.omega_max);
    get(m, "v_ref", c.v_ref);
    get(m, "d_base", c.d_base);
    get(m, "r_wheel", c.r_wheel);
    get(m, "turn_lookahead", c.turn_lookahead);
    get(m, "turn_angle_threshold", c.turn_angle_threshold);
    if (m.contains("profiles")) {
      if (m["profiles"].contains("STRAIGHT"))
        parse_weight_profile(m["profiles"]["STRAIGHT"], c.straight_profile);
      if (m["profiles"].contains("TURN"))
        parse_weight_profile(m["profiles"]["TURN"], c.turn_profile);
    }
    if (m.contains("solver")) {
      const auto& s = m["solver"];
      get(s, "max_iterations", c.solver.max_iterations);
      get(s, "stationarity_tol", c.solver.stationarity_tol);
      get(s, "constraint_tol", c.solver.constraint_tol);
      get(s, "penalty_initial", c.solver.penalty_initial);
      get(s, "penalty_growth", c.solver.penalty_growth);
    }
  }
  if (j.contains("flags")) {
    const auto& f = j["flags"];
    get(f, "adaptive_resolution", cfg.flags.adaptive_resolution);
    get(f, "turn_correction", cfg.flags.turn_correction);
    get(f, "adaptive_weights", cfg.flags.adaptive_weights);
    if (f.contains("sequencer_method")) {
      const std::string m = f["sequencer_method"].get<std::string>();
      if (m == "greedy") cfg.flags.sequencer_method = SequencerMethod::GREEDY;
      else if (m == "bcp") cfg.flags.sequencer_method = SequencerMethod::BCP;
      else if (m == "probabilistic") cfg.flags.sequencer_method = SequencerMethod::PROBABILISTIC;
      else throw Error("config: unknown sequencer_method '" + m + "'");
    }
    get(f, "gamma", cfg.flags.gamma.gamma);
  }
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    if (e.contains("experiment")) {
      const std::string k = e["experiment"].get<std::string>();
      if (k == "ablation") cfg.experiment.experiment = ExperimentConfig::Kind::ABLATION;
      else if (k == "sequencer") cfg.experiment.experiment = ExperimentConfig::Kind::SEQUENCER;
      else throw Error("config: unknown experiment '" + k + "'");
    }
    get(e, "map_seeds", cfg.experiment.map_seeds);
    get(e, "grid_width", cfg.experiment.grid_width);
    get(e, "grid_height", cfg.experiment.grid_height);
    get(e, "min_obstacles", cfg.experiment.min_obstacles);
    get(e, "max_obstacles", cfg.experiment.max_obstacles);
    get(e, "waypoint_counts", cfg.experiment.waypoint_counts);
    get(e, "gammas", cfg.experiment.gammas);
    get(e, "repeats", cfg.experiment.repeats);
    get(e, "output_dir", cfg.experiment.output_dir);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Minimal SVG emission for trajectory overlays and line charts.

struct SvgSeries {
  std::vector<Vec2> points;
  std::string color = "#1f77b4";
  std::string label;
};

inline std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title,
                                  const std::string& x_label, const std::string& y_label) {
  constexpr double W = 640, H = 480, m = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
    }
  if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  auto tx = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (W - 2 * m); };
  auto ty = [&](double y) { return H - m - (y - ymin) / (ymax - ymin) * (H - 2 * m); };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
     << "</text>\n"
     << "<line x1='" << m << "' y1='" << H - m << "' x2='" << W - m << "' y2='" << H - m
     << "' stroke='black'/>\n"
     << "<line x1='" << m << "' y1='" << m << "' x2='" << m << "' y2='" << H - m
     << "' stroke='black'/>\n"
     << "<text x='" << W / 2 << "' y='" << H - 16 << "' text-anchor='middle' font-size='12'>"
     << x_label << "</text>\n"
     << "<text x='16' y='" << H / 2 << "' font-size='12' transform='rotate(-90 16 " << H / 2
     << ")' text-anchor='middle'>" << y_label << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + k * (xmax - xmin) / 4, yv = ymin + k * (ymax - ymin) / 4;
    os << "<text x='" << tx(xv) << "' y='" << H - m + 16
       << "' text-anchor='middle' font-size='10'>" << std::setprecision(3) << xv << "</text>\n"
       << "<text x='" << m - 6 << "' y='" << ty(yv) + 3
       << "' text-anchor='end' font-size='10'>" << std::setprecision(3) << yv << "</text>\n";
  }
  int li = 0;
  for (const auto& s : series) {
    os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (const auto& p : s.points) os << tx(p.x) << ',' << ty(p.y) << ' ';
    os << "'/>\n";
    if (!s.label.empty())
      os << "<text x='" << W - m - 4 << "' y='" << m + 14 * ++li
         << "' text-anchor='end' font-size='11' fill='" << s.color << "'>" << s.label
         << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Map overlay: obstacles, waypoints, reference paths and the driven
/// trajectory.
inline std::string svg_trajectory(const WorldMap& map, const EpisodeLog& log) {
  constexpr double scale = 48, m = 20;
  const double W = map.width * scale + 2 * m, H = map.height * scale + 2 * m;
  auto tx = [&](double x) { return m + x * scale; };
  auto ty = [&](double y) { return H - m - y * scale; };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n";
  for (int r = 0; r <= map.height; ++r)
    os << "<line x1='" << tx(0) << "' y1='" << ty(r) << "' x2='" << tx(map.width) << "' y2='"
       << ty(r) << "' stroke='#ddd'/>\n";
  for (int c = 0; c <= map.width; ++c)
    os << "<line x1='" << tx(c) << "' y1='" << ty(0) << "' x2='" << tx(c) << "' y2='"
       << ty(map.height) << "' stroke='#ddd'/>\n";
  for (const auto& o : map.obstacles)
    os << "<rect x='" << tx(o.col) << "' y='" << ty(o.row + 1) << "' width='" << scale
       << "' height='" << scale << "' fill='black'/>\n";
  auto disc = [&](const GridCell& c, const char* color) {
    os << "<circle cx='" << tx(c.center().x) << "' cy='" << ty(c.center().y) << "' r='"
       << scale / 4 << "' fill='" << color << "'/>\n";
  };
  disc(map.start, "green");
  disc(map.goal, "red");
  for (const auto& w : map.waypoints) disc(w, "blue");
  for (const auto& p : log.paths) {
    os << "<polyline fill='none' stroke='#e6b800' stroke-dasharray='4 3' points='";
    for (const auto& q : p.points) os << tx(q.x) << ',' << ty(q.y) << ' ';
    os << "'/>\n";
  }
  os << "<polyline fill='none' stroke='#1f77b4' stroke-width='2' points='";
  for (const auto& s : log.samples) os << tx(s.state.x) << ',' << ty(s.state.y) << ' ';
  os << "'/>\n</svg>\n";
  return os.str();
}

}  // namespace mwnav
