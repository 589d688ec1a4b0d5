#pragma once

#include <cmath>
#include <optional>

#include "mwnav/simulator.hpp"

namespace mwnav {

struct MetricsReport {
  double cte_rms = 0.0;
  double j_lin = 0.0;
  double j_ang = 0.0;
  std::optional<double> traversal_time;  // absent on non-success
  double mean_compute_hz = 0.0;
  Outcome outcome = Outcome::TIMEOUT;
};

/// Distance from p to the segment [a, b].
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + s * vx), p.y - (a.y + s * vy));
}

inline double point_polyline_distance(const Vec2& p, const PosePath& path) {
  double best = std::numeric_limits<double>::infinity();
  if (path.points.size() == 1)
    return std::hypot(p.x - path.points[0].x, p.y - path.points[0].y);
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i)
    best = std::min(best, point_segment_distance(p, {path.points[i].x, path.points[i].y},
                                                 {path.points[i + 1].x, path.points[i + 1].y}));
  return best;
}

/// RMS of the per-sample minimum distance to the active reference polyline
/// (the granularized path, before turn correction).
inline double cross_track_error(const EpisodeLog& log) {
  if (log.samples.empty()) throw Error("cross_track_error: empty log");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : log.samples) {
    if (s.path_index < 0 || s.path_index >= static_cast<int>(log.paths.size())) continue;
    const double d = point_polyline_distance({s.state.x, s.state.y},
                                             log.paths[static_cast<std::size_t>(s.path_index)]);
    sum += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
}

/// Time-averaged |second central difference| of v and omega.
inline std::pair<double, double> jerk_metrics(const EpisodeLog& log) {
  const std::size_t n = log.samples.size();
  if (n < 3) throw Error("jerk_metrics: need at least 3 samples");
  const double dt = log.step;
  double jl = 0.0, ja = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ddv = (log.samples[i + 1].control.v - 2.0 * log.samples[i].control.v +
                        log.samples[i - 1].control.v) /
                       (dt * dt);
    const double ddw = (log.samples[i + 1].control.omega - 2.0 * log.samples[i].control.omega +
                        log.samples[i - 1].control.omega) /
                       (dt * dt);
    jl += std::abs(ddv);
    ja += std::abs(ddw);
  }
  const double denom = static_cast<double>(n - 2);
  return {jl * dt / denom, ja * dt / denom};
}

inline std::optional<double> traversal_time(const EpisodeLog& log) {
  for (const auto& e : log.events)
    if (e.kind == EventKind::GOAL_REACHED) return e.t;
  return std::nullopt;
}

inline double compute_frequency(const EpisodeLog& log) {
  if (log.samples.empty()) throw Error("compute_frequency: empty log");
  double total = 0.0;
  for (const auto& s : log.samples) total += s.compute_s;
  return total > 0.0 ? static_cast<double>(log.samples.size()) / total : 0.0;
}

inline MetricsReport compute_metrics(const EpisodeLog& log) {
  MetricsReport m;
  m.outcome = log.outcome;
  m.cte_rms = cross_track_error(log);
  if (log.samples.size() >= 3) {
    const auto [jl, ja] = jerk_metrics(log);
    m.j_lin = jl;
    m.j_ang = ja;
  }
  m.traversal_time = traversal_time(log);
  m.mean_compute_hz = compute_frequency(log);
  return m;
}

}  // namespace mwnav
