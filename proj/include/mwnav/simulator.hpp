#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "mwnav/controller.hpp"
#include "mwnav/planner.hpp"
#include "mwnav/sequencer.hpp"
#include "mwnav/solver.hpp"
#include "mwnav/world.hpp"

namespace mwnav {

struct FeatureFlags {
  bool adaptive_resolution = false;
  bool turn_correction = false;
  bool adaptive_weights = false;
  SequencerMethod sequencer_method = SequencerMethod::BCP;
  SearchFraction gamma{1.0};
};

struct ArrivalPolicy {
  double position_tolerance = 0.15;  // meters
};

enum class EventKind {
  WAYPOINT_REACHED,
  OBSTACLE_DETECTED,
  REPLANNED,
  COLLISION,
  GOAL_REACHED,
  TIMEOUT
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::WAYPOINT_REACHED: return "waypoint_reached";
    case EventKind::OBSTACLE_DETECTED: return "obstacle_detected";
    case EventKind::REPLANNED: return "replanned";
    case EventKind::COLLISION: return "collision";
    case EventKind::GOAL_REACHED: return "goal_reached";
    case EventKind::TIMEOUT: return "timeout";
  }
  return "?";
}

enum class Outcome { SUCCESS, COLLISION, TIMEOUT };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::SUCCESS: return "success";
    case Outcome::COLLISION: return "collision";
    case Outcome::TIMEOUT: return "timeout";
  }
  return "?";
}

struct EpisodeSample {
  double t = 0.0;
  RobotState state;
  ControlAction control;
  WheelCommand wheel;
  PosePoint reference;     // window-start reference point
  int iterations = 0;
  bool converged = true;
  double cost = 0.0;
  double defect = 0.0;
  ProfileLabel profile = ProfileLabel::STRAIGHT;
  double compute_s = 0.0;
  int path_index = -1;     // into EpisodeLog::paths
};

struct EpisodeEvent {
  double t = 0.0;
  EventKind kind = EventKind::REPLANNED;
  GridCell cell;  // waypoint or obstacle, where applicable
};

struct EpisodeLog {
  std::vector<EpisodeSample> samples;
  std::vector<EpisodeEvent> events;
  Outcome outcome = Outcome::TIMEOUT;
  std::vector<PosePath> paths;  // granularized references, pre turn-correction
  double step = 0.1;            // sample spacing h
};

struct SimulationConfig {
  MpcConfig mpc;
  SensorModel sensor;
  ArrivalPolicy arrival;
  double timeout = 300.0;       // sim seconds
  double robot_radius = 0.25;
  // The window consumes one path point per MPC stage, so point spacing / h is
  // the speed a reference demands. Turn-zone spacing 1/(r_turn+1) = 0.1 m
  // matches v_max * h exactly; straight spacing 0.2 m is a mild lookahead.
  ResolutionPolicy fixed_resolution{ResolutionPolicy::Mode::FIXED, 4, 4, 1};
  ResolutionPolicy adaptive_resolution{ResolutionPolicy::Mode::ADAPTIVE, 4, 9, 2};
  // Release distance sized to obstacle half-extent + robot radius: past it the
  // path is truncated at the upcoming corner so cutting cannot start early.
  TurnCorrectionPolicy turn_correction{true, 0.75};
  bool measure_timing = true;   // false keeps logs bit-reproducible
};

/// Robot disc vs closed unit obstacle squares.
inline bool check_collision(const RobotState& state, const CellSet& obstacles,
                            double robot_radius) {
  for (const auto& c : obstacles) {
    const double dx = std::max({static_cast<double>(c.col) - state.x,
                                0.0, state.x - (c.col + 1.0)});
    const double dy = std::max({static_cast<double>(c.row) - state.y,
                                0.0, state.y - (c.row + 1.0)});
    if (std::hypot(dx, dy) < robot_radius) return true;
  }
  return false;
}

namespace detail_sim {

inline GridCell cell_of(const RobotState& s, const WorldMap& map) {
  int col = static_cast<int>(std::floor(s.x));
  int row = static_cast<int>(std::floor(s.y));
  col = std::clamp(col, 0, map.width - 1);
  row = std::clamp(row, 0, map.height - 1);
  return {row, col};
}

}  // namespace detail_sim

/// Closed-loop episode: sense, update graph, (re)sequence, (re)plan, control,
/// integrate. The plant is the same RK4 kinematic model the controller uses;
/// the run is deterministic for fixed inputs.
inline EpisodeLog run_episode(const WorldMap& map, const FeatureFlags& flags,
                              const SimulationConfig& sim, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  EpisodeLog log;
  log.step = sim.mpc.step;

  MpcConfig mpc = sim.mpc;
  mpc.soft_state_bounds = true;
  mpc.bound_lo = {0.0, 0.0};
  mpc.bound_hi = {static_cast<double>(map.width), static_cast<double>(map.height)};

  RobotState state{map.start.center().x, map.start.center().y, 0.0};
  CellSet known;
  NavGraph graph = build_graph(map, known);

  std::vector<GridCell> pending = map.waypoints;
  std::mt19937_64 seq_rng(seed);

  const ResolutionPolicy& resolution =
      flags.adaptive_resolution ? sim.adaptive_resolution : sim.fixed_resolution;

  std::optional<GridCell> target;
  PosePath path;
  int path_index = -1;
  std::optional<MpcSolution> warm;

  auto choose_target = [&]() -> std::optional<GridCell> {
    if (pending.empty()) return map.goal;
    std::vector<Vec2> inter;
    for (const auto& c : pending) inter.push_back(c.center());
    SequencerResult r;
    switch (flags.sequencer_method) {
      case SequencerMethod::GREEDY:
        r = greedy_next({state.x, state.y}, inter);
        break;
      case SequencerMethod::BCP:
        r = bcp_next({state.x, state.y}, inter, map.goal.center());
        break;
      case SequencerMethod::PROBABILISTIC:
        r = probabilistic_next({state.x, state.y}, inter, map.goal.center(), flags.gamma,
                               seq_rng());
        break;
    }
    for (const auto& c : pending)
      if (c.center() == r.chosen) return c;
    return std::nullopt;  // unreachable; sequencer returns a pending point
  };

  auto plan_to = [&](const GridCell& to) -> bool {
    try {
      const RawPath raw = raw_path(graph, detail_sim::cell_of(state, map), to);
      path = granularize(raw, resolution);
      // A single-point plan (robot already in the target cell) carries no
      // segment direction; aim its pose reference at the point so the
      // controller is not pulled toward an arbitrary heading.
      if (path.points.size() == 1) {
        auto& pt = path.points.front();
        if (std::hypot(pt.x - state.x, pt.y - state.y) > 1e-9)
          pt.yaw_ref = std::atan2(pt.y - state.y, pt.x - state.x);
      }
      log.paths.push_back(path);
      path_index = static_cast<int>(log.paths.size()) - 1;
      return true;
    } catch (const Error&) {
      return false;
    }
  };

  // Plan failure fallback: try remaining intermediates, then the goal; a
  // fully blocked robot idles until timeout.
  auto replan = [&](double t, bool resequence) {
    log.events.push_back({t, EventKind::REPLANNED, target.value_or(map.goal)});
    if (!resequence && target && plan_to(*target)) return;
    target = choose_target();
    if (target && plan_to(*target)) return;
    for (const auto& c : pending)
      if (plan_to(c)) {
        target = c;
        return;
      }
    if (plan_to(map.goal)) {
      target = map.goal;
      return;
    }
    target.reset();
    path = PosePath{};
    path_index = -1;
  };

  target = choose_target();
  if (!target || !plan_to(*target)) replan(0.0, true);

  std::deque<Vec2> recent;  // trailing positions for stall detection
  bool recovering = false;
  int turn_hold = 0;  // ticks left of turn-weight hysteresis

  const int max_steps = static_cast<int>(std::ceil(sim.timeout / mpc.step));
  for (int k = 0; k < max_steps; ++k) {
    const double t = k * mpc.step;
    const auto tick_start = clock::now();

    recent.push_back({state.x, state.y});
    if (recent.size() > 11) recent.pop_front();
    const bool stalled =
        recent.size() == 11 &&
        euclidean_dist(recent.front(), recent.back()) < 0.05;
    // Sustained reverse means the robot is tracking a reversed leg backwards
    // instead of turning around; treat it like a stall.
    double v_trail = 0.0;
    for (std::size_t i = log.samples.size() > 10 ? log.samples.size() - 10 : 0;
         i < log.samples.size(); ++i)
      v_trail += log.samples[i].control.v;
    const bool retrograde = log.samples.size() >= 10 && v_trail < -0.5;

    // 1. Sense; new obstacles invalidate the graph and force a replan.
    const CellSet fresh = sense(map, {state.x, state.y}, sim.sensor, known);
    if (!fresh.empty()) {
      for (const auto& c : fresh) {
        known.insert(c);
        graph = remove_vertex(graph, c);
        log.events.push_back({t, EventKind::OBSTACLE_DETECTED, c});
      }
      const bool target_lost = target && !graph.has_vertex(*target);
      replan(t, target_lost);
    }

    // The robot spawns aligned with the first planned segment (after the
    // initial sense): only the start cell is prescribed, and this avoids a
    // fictitious turn-in-place transient at t = 0.
    if (k == 0 && !path.empty()) state.yaw = path.points.front().yaw_ref;

    // 2. Arrival bookkeeping.
    while (target &&
           euclidean_dist({state.x, state.y}, target->center()) <= sim.arrival.position_tolerance) {
      if (*target == map.goal && pending.empty()) {
        log.events.push_back({t, EventKind::GOAL_REACHED, *target});
        log.outcome = Outcome::SUCCESS;
        return log;
      }
      log.events.push_back({t, EventKind::WAYPOINT_REACHED, *target});
      pending.erase(std::find(pending.begin(), pending.end(), *target));
      target = choose_target();
      if (!target || !plan_to(*target)) replan(t, true);
    }

    EpisodeSample sample;
    sample.t = t;
    sample.state = state;
    sample.path_index = path_index;

    if (!path.empty()) {
      // 3. Reference shaping and profile selection.
      PosePath ref_path = path;
      if (flags.turn_correction)
        ref_path = corrective_turn_filter(ref_path, {state.x, state.y}, sim.turn_correction);
      MpcProblem prob = nearest_reference(ref_path, state, mpc.horizon, mpc.v_ref);
      prob.profile = flags.adaptive_weights
                         ? select_weight_profile(prob.ref_states, mpc, ProfileLabel::STRAIGHT)
                         : mpc.straight_profile;
      // The lookahead test only sees yaw jumps inside the window; the robot's
      // own misalignment with the leg (corner exit, or a fresh leg starting
      // nearly perpendicular after a waypoint pivot) is invisible to it.
      // Moderate misalignment keeps the turn weights engaged; past a right
      // angle the robot rotates in place instead, since zeroed reference
      // controls pull v to 0 and the swing radius collapses with it.
      if (flags.adaptive_weights) {
        const auto [yc, yr] =
            fix_yaw(wrap_angle(state.yaw), wrap_angle(prob.ref_states.front().yaw));
        const double miss = std::abs(yc - yr);
        if (miss > 0.45) {
          prob.profile = {{1.0, 1.0, 4.0}, {3.0, 0.5}, ProfileLabel::TURN};
          for (auto& rc : prob.ref_controls) rc = {0.0, 0.0};
        }
      }

      // Stall recovery: conflicting pre- and post-corner references can make
      // "stand still" the optimum under the normal control weights. When the
      // robot has stopped progressing while the window still demands motion,
      // drop the control penalties for this tick so the back-up-and-swing
      // maneuver that frees it becomes worth its turn cost.
      const auto& rs = prob.ref_states;
      const double span =
          std::hypot(rs.back().x - state.x, rs.back().y - state.y);
      if ((stalled || retrograde) && span > sim.arrival.position_tolerance) {
        prob.profile.r = {0.05, 0.02};
        if (!recovering) warm.reset();  // leave the stuck basin once
        recovering = true;
      } else {
        recovering = false;
      }

      // 4. Solve and apply the first control.
      MpcSolution sol = solve_mpc(prob, mpc, warm);
      warm = sol;
      sample.control = sol.controls.front();
      sample.reference = {prob.ref_states[0].x, prob.ref_states[0].y, prob.ref_states[0].yaw};
      sample.iterations = sol.iterations;
      sample.converged = sol.converged;
      sample.cost = sol.cost;
      sample.defect = sol.defect_norm;
      sample.profile = prob.profile.label;
    } else {
      sample.control = {0.0, 0.0};  // blocked: idle in place
      sample.reference = {state.x, state.y, state.yaw};
      warm.reset();
    }
    sample.wheel = to_wheel_command(sample.control, mpc);
    if (sim.measure_timing)
      sample.compute_s =
          std::chrono::duration<double>(clock::now() - tick_start).count();
    log.samples.push_back(sample);

    state = rk4_step(state, sample.control, mpc.step);
    state.yaw = wrap_angle(state.yaw);

    // 5. Collision check against the true obstacle set.
    if (check_collision(state, map.obstacles, sim.robot_radius)) {
      log.events.push_back({t + mpc.step, EventKind::COLLISION,
                            detail_sim::cell_of(state, map)});
      log.outcome = Outcome::COLLISION;
      return log;
    }
  }
  log.events.push_back({sim.timeout, EventKind::TIMEOUT, detail_sim::cell_of(state, map)});
  log.outcome = Outcome::TIMEOUT;
  return log;
}

}  // namespace mwnav
