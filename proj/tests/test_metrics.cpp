#include <catch2/catch_amalgamated.hpp>

#include "mwnav/metrics.hpp"

using namespace mwnav;
using Catch::Matchers::WithinAbs;

namespace {

EpisodeLog log_with_controls(const std::vector<double>& v, const std::vector<double>& w,
                             double dt) {
  EpisodeLog log;
  log.step = dt;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EpisodeSample s;
    s.t = static_cast<double>(i) * dt;
    s.control = {v[i], w[i]};
    log.samples.push_back(s);
  }
  return log;
}

EpisodeLog log_on_path(const std::vector<Vec2>& path_pts, const std::vector<Vec2>& states) {
  EpisodeLog log;
  PosePath path;
  for (const auto& p : path_pts) path.points.push_back({p.x, p.y, 0.0});
  log.paths.push_back(path);
  for (const auto& s : states) {
    EpisodeSample smp;
    smp.state = {s.x, s.y, 0.0};
    smp.path_index = 0;
    log.samples.push_back(smp);
  }
  return log;
}

}  // namespace

TEST_CASE("point_segment_distance") {
  CHECK(point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == 1.0);
  CHECK(point_segment_distance({3, 0}, {-1, 0}, {1, 0}) == 2.0);  // clamps to endpoint
  CHECK(point_segment_distance({0.5, 0}, {0, 0}, {1, 0}) == 0.0);
  CHECK_THAT(point_segment_distance({1, 1}, {0, 0}, {0, 0}), WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("jerk of a quadratic speed profile") {
  // v_k = (k dt)^2 has constant second difference 2 dt^2, so the metric is
  // exactly 2 dt regardless of length.
  for (double dt : {0.1, 0.05}) {
    std::vector<double> v, w;
    for (int k = 0; k < 12; ++k) {
      v.push_back((k * dt) * (k * dt));
      w.push_back(0.0);
    }
    const auto [jl, ja] = jerk_metrics(log_with_controls(v, w, dt));
    CHECK_THAT(jl, WithinAbs(2.0 * dt, 1e-12));
    CHECK(ja == 0.0);
  }
}

TEST_CASE("jerk of an isolated spike") {
  // v = (0, 0, 1, 0, 0), dt = 0.1: interior second differences are
  // (100, -200, 100), so J = (100+200+100) * 0.1 / 3 = 40/3.
  const auto [jl, ja] =
      jerk_metrics(log_with_controls({0, 0, 1, 0, 0}, {0, 0, 0, 0, 0}, 0.1));
  CHECK_THAT(jl, WithinAbs(40.0 / 3.0, 1e-9));
  CHECK(ja == 0.0);
}

TEST_CASE("constant and affine profiles have zero jerk") {
  const auto [jl1, ja1] =
      jerk_metrics(log_with_controls({0.5, 0.5, 0.5, 0.5}, {0.2, 0.2, 0.2, 0.2}, 0.1));
  CHECK(jl1 == 0.0);
  CHECK(ja1 == 0.0);
  std::vector<double> v, w;
  for (int k = 0; k < 8; ++k) {
    v.push_back(0.1 + 0.05 * k);
    w.push_back(-0.3 + 0.02 * k);
  }
  const auto [jl2, ja2] = jerk_metrics(log_with_controls(v, w, 0.1));
  CHECK_THAT(jl2, WithinAbs(0.0, 1e-12));
  CHECK_THAT(ja2, WithinAbs(0.0, 1e-12));
}

TEST_CASE("jerk needs at least three samples") {
  CHECK_THROWS_AS(jerk_metrics(log_with_controls({0, 1}, {0, 0}, 0.1)), Error);
}

TEST_CASE("cross_track_error") {
  const std::vector<Vec2> line{{0, 0}, {1, 0}, {2, 0}};
  SECTION("on-path samples give zero") {
    CHECK(cross_track_error(log_on_path(line, {{0.3, 0}, {1.1, 0}, {1.9, 0}})) == 0.0);
  }
  SECTION("constant offset is returned exactly") {
    CHECK_THAT(cross_track_error(log_on_path(line, {{0.5, 0.2}, {1.5, 0.2}})),
               WithinAbs(0.2, 1e-12));
  }
  SECTION("RMS of mixed offsets") {
    // Distances 0 and 1: RMS sqrt(0.5).
    CHECK_THAT(cross_track_error(log_on_path(line, {{1.0, 0.0}, {1.0, 1.0}})),
               WithinAbs(std::sqrt(0.5), 1e-12));
  }
  SECTION("samples without an active path are skipped") {
    auto log = log_on_path(line, {{0.5, 0.3}, {1.5, 0.3}});
    EpisodeSample idle;
    idle.state = {50, 50, 0};
    idle.path_index = -1;
    log.samples.push_back(idle);
    CHECK_THAT(cross_track_error(log), WithinAbs(0.3, 1e-12));
  }
  SECTION("empty log is an error") {
    CHECK_THROWS_AS(cross_track_error(EpisodeLog{}), Error);
  }
  SECTION("translation invariance") {
    const double base = cross_track_error(log_on_path(line, {{0.4, 0.7}, {1.2, 0.7}}));
    std::vector<Vec2> shifted_path, shifted_states;
    for (const auto& p : line) shifted_path.push_back({p.x + 3, p.y - 2});
    for (const auto& s : std::vector<Vec2>{{0.4, 0.7}, {1.2, 0.7}})
      shifted_states.push_back({s.x + 3, s.y - 2});
    CHECK_THAT(cross_track_error(log_on_path(shifted_path, shifted_states)),
               WithinAbs(base, 1e-12));
  }
}

TEST_CASE("traversal_time and compute_frequency") {
  EpisodeLog log = log_with_controls({0, 0, 0}, {0, 0, 0}, 0.1);
  CHECK_FALSE(traversal_time(log).has_value());
  log.events.push_back({4.2, EventKind::GOAL_REACHED, {0, 0}});
  REQUIRE(traversal_time(log).has_value());
  CHECK(*traversal_time(log) == 4.2);

  for (auto& s : log.samples) s.compute_s = 0.002;
  CHECK_THAT(compute_frequency(log), WithinAbs(500.0, 1e-9));
  for (auto& s : log.samples) s.compute_s = 0.0;
  CHECK(compute_frequency(log) == 0.0);
}

TEST_CASE("compute_metrics aggregates the pieces") {
  EpisodeLog log = log_on_path({{0, 0}, {2, 0}}, {{0.5, 0.1}, {1.0, 0.1}, {1.5, 0.1}});
  log.step = 0.1;
  log.outcome = Outcome::SUCCESS;
  log.events.push_back({0.2, EventKind::GOAL_REACHED, {0, 0}});
  const MetricsReport m = compute_metrics(log);
  CHECK_THAT(m.cte_rms, WithinAbs(0.1, 1e-12));
  CHECK(m.j_lin == 0.0);
  CHECK(m.outcome == Outcome::SUCCESS);
  REQUIRE(m.traversal_time.has_value());
  CHECK(*m.traversal_time == 0.2);
}
