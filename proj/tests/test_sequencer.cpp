#include <catch2/catch_amalgamated.hpp>

#include "mwnav/sequencer.hpp"

using namespace mwnav;

namespace {

// Independent brute-force oracle: recursive enumeration of all intermediate
// orderings, no shared code with the streaming implementation.
double brute_force_best(const Vec2& current, std::vector<Vec2> inter, const Vec2& goal) {
  if (inter.empty()) return euclidean_dist(current, goal);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inter.size(); ++i) {
    std::vector<Vec2> rest = inter;
    rest.erase(rest.begin() + static_cast<long>(i));
    best = std::min(best, euclidean_dist(current, inter[i]) + brute_force_best(inter[i], rest, goal));
  }
  return best;
}

}  // namespace

TEST_CASE("euclidean_dist") {
  CHECK(euclidean_dist({0, 0}, {3, 4}) == 5.0);
  CHECK(euclidean_dist({2, 2}, {2, 2}) == 0.0);
  CHECK_THAT(euclidean_dist({1, 1}, {2, 2}), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("dist_metric") {
  CHECK(dist_metric({{0, 0}, {1, 0}, {1, 1}}) == 2.0);
  CHECK(dist_metric({{0, 0}}) == 0.0);
  CHECK(dist_metric({}) == 0.0);
  CHECK_THAT(dist_metric({{0, 0}, {3, 4}, {3, 0}}), Catch::Matchers::WithinAbs(9.0, 1e-12));
}

TEST_CASE("greedy_next") {
  SECTION("strictly nearer waypoint wins") {
    const auto r = greedy_next({0.5, 0.5}, {{1.5, 0.5}, {5.5, 5.5}});
    CHECK(r.chosen == Vec2{1.5, 0.5});
    CHECK(r.permutations_evaluated == 2);
  }
  SECTION("single pending waypoint") {
    CHECK(greedy_next({0, 0}, {{4, 4}}).chosen == Vec2{4, 4});
  }
  SECTION("ties break to the lowest index") {
    CHECK(greedy_next({0, 0}, {{1, 0}, {0, 1}}).chosen == Vec2{1, 0});
  }
  SECTION("empty pending") {
    CHECK_THROWS_AS(greedy_next({0, 0}, {}), Error);
  }
}

TEST_CASE("bcp_next hand enumeration") {
  const auto r = bcp_next({0, 0}, {{1, 0}, {0, 1}}, {2, 0});
  // [cur,(0,1),(1,0),goal] costs 1 + sqrt2 + 1; the other order 1 + sqrt2 + sqrt5.
  CHECK(r.chosen == Vec2{0, 1});
  CHECK_THAT(r.tour_cost, Catch::Matchers::WithinAbs(2.0 + std::sqrt(2.0), 1e-12));
  CHECK(r.permutations_evaluated == 2);
}

TEST_CASE("bcp_next single intermediate") {
  const auto r = bcp_next({0, 0}, {{3, 3}}, {5, 0});
  CHECK(r.chosen == Vec2{3, 3});
  CHECK(r.permutations_evaluated == 1);
}

TEST_CASE("bcp_next matches the brute-force oracle") {
  std::mt19937_64 rng(2024);
  auto coord = [&] { return static_cast<double>(uniform_u64(rng, 0, 90)) / 10.0; };
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + trial % 4;
    const Vec2 cur{coord(), coord()}, goal{coord(), coord()};
    std::vector<Vec2> inter;
    for (std::size_t i = 0; i < m; ++i) inter.push_back({coord(), coord()});
    const auto r = bcp_next(cur, inter, goal);
    CHECK_THAT(r.tour_cost,
               Catch::Matchers::WithinAbs(brute_force_best(cur, inter, goal), 1e-9));
    CHECK(r.permutations_evaluated == detail::factorial(m));
  }
}

TEST_CASE("bcp_next enumeration cap") {
  std::vector<Vec2> inter(11, Vec2{1, 1});
  CHECK_THROWS_AS(bcp_next({0, 0}, inter, {5, 5}), Error);
}

TEST_CASE("probabilistic_next") {
  std::mt19937_64 rng(5);
  auto coord = [&] { return static_cast<double>(uniform_u64(rng, 0, 90)) / 10.0; };
  SECTION("gamma = 1 matches BCP cost") {
    for (int trial = 0; trial < 20; ++trial) {
      const Vec2 cur{coord(), coord()}, goal{coord(), coord()};
      std::vector<Vec2> inter;
      for (int i = 0; i < 4; ++i) inter.push_back({coord(), coord()});
      const auto p = probabilistic_next(cur, inter, goal, {1.0}, 77 + trial);
      const auto b = bcp_next(cur, inter, goal);
      CHECK_THAT(p.tour_cost, Catch::Matchers::WithinAbs(b.tour_cost, 1e-9));
    }
  }
  SECTION("kept count is ceil(gamma * m!) exactly") {
    std::vector<Vec2> inter;
    for (int i = 0; i < 5; ++i) inter.push_back({coord(), coord()});
    CHECK(probabilistic_next({0, 0}, inter, {9, 9}, {0.5}, 1).permutations_evaluated == 60);
    CHECK(probabilistic_next({0, 0}, inter, {9, 9}, {0.001}, 1).permutations_evaluated == 1);
  }
  SECTION("single intermediate") {
    CHECK(probabilistic_next({0, 0}, {{2, 2}}, {9, 9}, {0.3}, 1).chosen == Vec2{2, 2});
  }
  SECTION("cost never beats the exhaustive optimum") {
    for (int trial = 0; trial < 30; ++trial) {
      const Vec2 cur{coord(), coord()}, goal{coord(), coord()};
      std::vector<Vec2> inter;
      for (int i = 0; i < 5; ++i) inter.push_back({coord(), coord()});
      const auto p = probabilistic_next(cur, inter, goal, {0.25}, trial);
      const auto b = bcp_next(cur, inter, goal);
      CHECK(p.tour_cost >= b.tour_cost - 1e-9);
    }
  }
  SECTION("deterministic for a fixed seed") {
    std::vector<Vec2> inter{{1, 2}, {3, 1}, {0, 4}, {4, 4}};
    const auto a = probabilistic_next({0, 0}, inter, {5, 5}, {0.3}, 99);
    const auto b = probabilistic_next({0, 0}, inter, {5, 5}, {0.3}, 99);
    CHECK(a.chosen == b.chosen);
    CHECK(a.tour_cost == b.tour_cost);
  }
  SECTION("gamma out of range") {
    CHECK_THROWS_AS(probabilistic_next({0, 0}, {{1, 1}}, {2, 2}, {0.0}, 1), Error);
    CHECK_THROWS_AS(probabilistic_next({0, 0}, {{1, 1}}, {2, 2}, {1.5}, 1), Error);
  }
}

TEST_CASE("accuracy_trial") {
  ScenarioParams p;
  p.n_waypoints = 4;
  std::vector<WorldMap> maps;
  for (std::uint64_t s = 1; s <= 4; ++s) maps.push_back(generate_scenario(s, p));

  SECTION("BCP is exact by construction") {
    CHECK(accuracy_trial(maps, SequencerMethod::BCP, {1.0}, 1, 0).accuracy == 1.0);
  }
  SECTION("probabilistic at gamma = 1 is exact") {
    CHECK(accuracy_trial(maps, SequencerMethod::PROBABILISTIC, {1.0}, 3, 0).accuracy == 1.0);
  }
  SECTION("rows carry the trial data") {
    const auto st = accuracy_trial(maps, SequencerMethod::PROBABILISTIC, {0.5}, 2, 0);
    CHECK(st.rows.size() == maps.size() * 2);
    for (const auto& r : st.rows) {
      CHECK(r.tour_cost >= r.best_cost - 1e-9);
      CHECK(r.gamma == 0.5);
    }
  }
}
