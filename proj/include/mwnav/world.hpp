#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mwnav/geometry.hpp"

namespace mwnav {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One unit-square cell of the grid. Cell side is 1 m, the cell center
/// sits at (col + 0.5, row + 0.5) in world coordinates.
struct GridCell {
  int row = 0;
  int col = 0;

  Vec2 center() const { return {col + 0.5, row + 0.5}; }

  friend bool operator==(const GridCell& a, const GridCell& b) {
    return a.row == b.row && a.col == b.col;
  }
  friend bool operator!=(const GridCell& a, const GridCell& b) { return !(a == b); }
  friend bool operator<(const GridCell& a, const GridCell& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  }
};

using CellSet = std::set<GridCell>;

struct WorldMap {
  int width = 0;
  int height = 0;
  CellSet obstacles;
  std::vector<GridCell> waypoints;  // intermediates, visiting order free
  GridCell start;
  GridCell goal;
  std::uint64_t seed = 0;

  bool in_bounds(const GridCell& c) const {
    return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
  }
  bool is_obstacle(const GridCell& c) const { return obstacles.count(c) > 0; }

  friend bool operator==(const WorldMap& a, const WorldMap& b) {
    return a.width == b.width && a.height == b.height && a.obstacles == b.obstacles &&
           a.waypoints == b.waypoints && a.start == b.start && a.goal == b.goal &&
           a.seed == b.seed;
  }
};

/// Undirected navigation graph over free cells; edges join orthogonal
/// neighbours. Stored implicitly as the blocked-cell set.
class NavGraph {
 public:
  NavGraph() = default;
  NavGraph(int width, int height, CellSet blocked)
      : width_(width), height_(height), blocked_(std::move(blocked)) {}

  int width() const { return width_; }
  int height() const { return height_; }

  bool has_vertex(const GridCell& c) const {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_ &&
           blocked_.count(c) == 0;
  }

  /// Free orthogonal neighbours in fixed expansion order East, North, West, South.
  std::vector<GridCell> neighbors(const GridCell& c) const {
    std::vector<GridCell> out;
    const GridCell cand[4] = {{c.row, c.col + 1},
                              {c.row + 1, c.col},
                              {c.row, c.col - 1},
                              {c.row - 1, c.col}};
    for (const auto& n : cand)
      if (has_vertex(n)) out.push_back(n);
    return out;
  }

  std::size_t vertex_count() const {
    std::size_t blocked_in_grid = 0;
    for (const auto& c : blocked_)
      if (c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_) ++blocked_in_grid;
    return static_cast<std::size_t>(width_) * height_ - blocked_in_grid;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c) {
        GridCell cell{r, c};
        if (!has_vertex(cell)) continue;
        if (has_vertex({r, c + 1})) ++n;
        if (has_vertex({r + 1, c})) ++n;
      }
    return n;
  }

  const CellSet& blocked() const { return blocked_; }

 private:
  int width_ = 0;
  int height_ = 0;
  CellSet blocked_;
};

struct SensorModel {
  double radius = 2.5;  // closed disc: distance <= radius is detected
};

inline NavGraph build_graph(const WorldMap& map, const CellSet& known_obstacles) {
  CellSet blocked;
  for (const auto& c : known_obstacles)
    if (map.in_bounds(c)) blocked.insert(c);
  return NavGraph(map.width, map.height, std::move(blocked));
}

/// Removing an absent vertex is a no-op.
inline NavGraph remove_vertex(const NavGraph& graph, const GridCell& cell) {
  CellSet blocked = graph.blocked();
  blocked.insert(cell);
  return NavGraph(graph.width(), graph.height(), std::move(blocked));
}

inline CellSet sense(const WorldMap& map, const Vec2& position, const SensorModel& sensor,
                     const CellSet& already_known) {
  CellSet out;
  for (const auto& obs : map.obstacles) {
    if (already_known.count(obs)) continue;
    if (euclidean_dist(position, obs.center()) <= sensor.radius) out.insert(obs);
  }
  return out;
}

/// True iff start, goal and all waypoints share one 4-connected free component.
inline bool is_traversable(const WorldMap& map) {
  if (map.is_obstacle(map.start)) return false;
  std::vector<char> seen(static_cast<std::size_t>(map.width) * map.height, 0);
  auto idx = [&](const GridCell& c) { return static_cast<std::size_t>(c.row) * map.width + c.col; };
  std::vector<GridCell> stack{map.start};
  seen[idx(map.start)] = 1;
  NavGraph g = build_graph(map, map.obstacles);
  while (!stack.empty()) {
    GridCell c = stack.back();
    stack.pop_back();
    for (const auto& n : g.neighbors(c)) {
      if (!seen[idx(n)]) {
        seen[idx(n)] = 1;
        stack.push_back(n);
      }
    }
  }
  if (!seen[idx(map.goal)]) return false;
  for (const auto& w : map.waypoints)
    if (!seen[idx(w)]) return false;
  return true;
}

/// Uniform integer in [lo, hi] from the generator's raw bits; avoids the
/// implementation-defined std::uniform_int_distribution.
inline std::uint64_t uniform_u64(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo + 1;
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % span;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return lo + v % span;
}

struct ScenarioParams {
  int width = 10;
  int height = 10;
  int min_obstacles = 25;
  int max_obstacles = 35;
  int n_waypoints = 8;
  int retry_budget = 10000;
};

inline WorldMap generate_scenario(std::uint64_t seed, const ScenarioParams& p) {
  if (p.width < 2 || p.height < 2) throw Error("generate_scenario: grid must be at least 2x2");
  if (p.min_obstacles < 0 || p.max_obstacles < p.min_obstacles)
    throw Error("generate_scenario: bad obstacle range");
  if (p.n_waypoints + p.max_obstacles + 2 > p.width * p.height)
    throw Error("generate_scenario: grid too small for requested content");

  std::mt19937_64 rng(seed);
  const GridCell start{0, 0};
  const GridCell goal{p.height - 1, p.width - 1};

  for (int attempt = 0; attempt < p.retry_budget; ++attempt) {
    WorldMap map;
    map.width = p.width;
    map.height = p.height;
    map.start = start;
    map.goal = goal;
    map.seed = seed;

    const int n_obs = static_cast<int>(
        uniform_u64(rng, static_cast<std::uint64_t>(p.min_obstacles),
                    static_cast<std::uint64_t>(p.max_obstacles)));
    auto draw_cell = [&] {
      return GridCell{static_cast<int>(uniform_u64(rng, 0, p.height - 1)),
                      static_cast<int>(uniform_u64(rng, 0, p.width - 1))};
    };
    bool ok = true;
    while (static_cast<int>(map.obstacles.size()) < n_obs) {
      GridCell c = draw_cell();
      if (c == start || c == goal) continue;
      map.obstacles.insert(c);
    }
    CellSet used = map.obstacles;
    used.insert(start);
    used.insert(goal);
    for (int i = 0; i < p.n_waypoints; ++i) {
      GridCell c;
      int tries = 0;
      do {
        c = draw_cell();
        if (++tries > 10 * p.width * p.height) {
          ok = false;
          break;
        }
      } while (used.count(c));
      if (!ok) break;
      used.insert(c);
      map.waypoints.push_back(c);
    }
    if (ok && is_traversable(map)) return map;
  }
  throw Error("generate_scenario: retry budget exhausted (infeasible parameters?)");
}

}  // namespace mwnav
