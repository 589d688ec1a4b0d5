#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mwnav/geometry.hpp"
#include "mwnav/world.hpp"

namespace mwnav {

/// Orthogonally-connected cell sequence from the current cell to the target.
struct RawPath {
  std::vector<GridCell> cells;
};

struct PosePoint {
  double x = 0.0;
  double y = 0.0;
  double yaw_ref = 0.0;  // heading toward the next point; last repeats previous
};

struct PosePath {
  std::vector<PosePoint> points;
  std::vector<std::size_t> turn_indices;  // points where the heading changes

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

struct ResolutionPolicy {
  enum class Mode { FIXED, ADAPTIVE };
  Mode mode = Mode::FIXED;
  int r_straight = 1;  // interior points per straight segment
  int r_turn = 4;      // interior points per segment near a turn (ADAPTIVE)
  int turn_window = 1; // segments on each side of a corner that densify
};

struct TurnCorrectionPolicy {
  bool enabled = false;
  double threshold = 1.5;  // meters
};

/// BFS shortest path by edge count; neighbor expansion order East, North,
/// West, South fixes tie-breaking.
inline RawPath raw_path(const NavGraph& graph, const GridCell& from, const GridCell& to) {
  if (!graph.has_vertex(from) || !graph.has_vertex(to))
    throw Error("raw_path: endpoint is not a graph vertex");
  if (from == to) return {{from}};

  const std::size_t n = static_cast<std::size_t>(graph.width()) * graph.height();
  auto idx = [&](const GridCell& c) {
    return static_cast<std::size_t>(c.row) * graph.width() + c.col;
  };
  std::vector<int> parent(n, -1);
  std::vector<char> seen(n, 0);
  std::deque<GridCell> queue{from};
  seen[idx(from)] = 1;
  while (!queue.empty()) {
    GridCell c = queue.front();
    queue.pop_front();
    if (c == to) break;
    for (const auto& nb : graph.neighbors(c)) {
      if (!seen[idx(nb)]) {
        seen[idx(nb)] = 1;
        parent[idx(nb)] = static_cast<int>(idx(c));
        queue.push_back(nb);
      }
    }
  }
  if (!seen[idx(to)]) throw Error("raw_path: no path between cells");

  RawPath path;
  for (std::size_t i = idx(to);; i = static_cast<std::size_t>(parent[i])) {
    path.cells.push_back({static_cast<int>(i) / graph.width(),
                          static_cast<int>(i) % graph.width()});
    if (parent[i] < 0) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

/// Cell indices whose incoming and outgoing grid directions differ.
inline std::vector<std::size_t> detect_turns(const RawPath& raw) {
  std::vector<std::size_t> turns;
  for (std::size_t i = 1; i + 1 < raw.cells.size(); ++i) {
    const int din_r = raw.cells[i].row - raw.cells[i - 1].row;
    const int din_c = raw.cells[i].col - raw.cells[i - 1].col;
    const int dout_r = raw.cells[i + 1].row - raw.cells[i].row;
    const int dout_c = raw.cells[i + 1].col - raw.cells[i].col;
    if (din_r != dout_r || din_c != dout_c) turns.push_back(i);
  }
  return turns;
}

/// Heading-to-next yaw assignment; the last point repeats the previous yaw
/// and a single point gets yaw 0. Turn indices fall out of the yaw changes.
inline PosePath assign_yaw(const std::vector<Vec2>& pts) {
  PosePath path;
  path.points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    PosePoint p;
    p.x = pts[i].x;
    p.y = pts[i].y;
    if (i + 1 < pts.size())
      p.yaw_ref = std::atan2(pts[i + 1].y - pts[i].y, pts[i + 1].x - pts[i].x);
    else
      p.yaw_ref = path.points.empty() ? 0.0 : path.points.back().yaw_ref;
    path.points.push_back(p);
  }
  for (std::size_t i = 1; i + 1 < path.points.size(); ++i)
    if (std::abs(wrap_angle(path.points[i].yaw_ref - path.points[i - 1].yaw_ref)) > 1e-9)
      path.turn_indices.push_back(i);
  return path;
}

/// Map cells to centers and insert r equally spaced interior points per
/// segment; in ADAPTIVE mode segments within `turn_window` of a corner use
/// r_turn instead of r_straight.
inline PosePath granularize(const RawPath& raw, const ResolutionPolicy& policy) {
  if (raw.cells.empty()) throw Error("granularize: empty raw path");
  const std::vector<std::size_t> turns = detect_turns(raw);
  auto near_turn = [&](std::size_t segment) {
    for (std::size_t t : turns) {
      const long lo = static_cast<long>(t) - policy.turn_window;
      const long hi = static_cast<long>(t) + policy.turn_window - 1;
      if (static_cast<long>(segment) >= lo && static_cast<long>(segment) <= hi) return true;
    }
    return false;
  };

  std::vector<Vec2> pts;
  pts.push_back(raw.cells.front().center());
  for (std::size_t s = 0; s + 1 < raw.cells.size(); ++s) {
    const Vec2 a = raw.cells[s].center();
    const Vec2 b = raw.cells[s + 1].center();
    int r = policy.r_straight;
    if (policy.mode == ResolutionPolicy::Mode::ADAPTIVE && near_turn(s)) r = policy.r_turn;
    for (int k = 1; k <= r; ++k) {
      const double f = static_cast<double>(k) / (r + 1);
      pts.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
    }
    pts.push_back(b);
  }
  return assign_yaw(pts);
}

/// Algorithm to align a current/reference yaw pair across the atan2 branch
/// cut so the tracked error never exceeds pi in magnitude.
inline std::pair<double, double> fix_yaw(double yaw_cur, double yaw_ref) {
  constexpr double tol = 1e-9;
  if (std::abs(yaw_ref - M_PI) <= tol && yaw_cur < 0.0)
    yaw_cur += 2.0 * M_PI;
  else if (std::abs(yaw_ref + M_PI) <= tol && yaw_cur > 0.0)
    yaw_cur -= 2.0 * M_PI;
  if (yaw_cur * yaw_ref < 0.0 && std::abs(yaw_cur - yaw_ref) > M_PI) {
    if (yaw_cur < 0.0)
      yaw_ref -= 2.0 * M_PI;
    else
      yaw_ref += 2.0 * M_PI;
  }
  return {yaw_cur, yaw_ref};
}

/// While the robot is farther than `threshold` from the next upcoming turn
/// point, truncate the path just past that turn so the controller commits to
/// the corner instead of smoothing through it.
inline PosePath corrective_turn_filter(const PosePath& path, const Vec2& position,
                                       const TurnCorrectionPolicy& policy) {
  if (!policy.enabled || path.turn_indices.empty() || path.empty()) return path;

  // Nearest path point marks progress; the first turn at or after it is the
  // upcoming one.
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const double d = std::hypot(path.points[i].x - position.x, path.points[i].y - position.y);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  std::optional<std::size_t> upcoming;
  for (std::size_t t : path.turn_indices)
    if (t >= nearest) {
      upcoming = t;
      break;
    }
  if (!upcoming) return path;

  const PosePoint& tp = path.points[*upcoming];
  const double dist = std::hypot(tp.x - position.x, tp.y - position.y);
  if (dist <= policy.threshold) return path;

  PosePath out;
  out.points.assign(path.points.begin(), path.points.begin() + static_cast<long>(*upcoming) + 1);
  for (std::size_t t : path.turn_indices)
    if (t <= *upcoming) out.turn_indices.push_back(t);
  return out;
}

}  // namespace mwnav
