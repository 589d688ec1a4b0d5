#include <catch2/catch_amalgamated.hpp>

#include "mwnav/solver.hpp"

using namespace mwnav;
using Catch::Matchers::WithinAbs;

namespace {

MpcProblem stationary_problem(const MpcConfig& cfg, const RobotState& x0) {
  MpcProblem prob;
  prob.x0 = x0;
  prob.ref_states.assign(cfg.horizon + 1, x0);
  prob.ref_controls.assign(cfg.horizon, {0.0, 0.0});
  prob.profile = cfg.straight_profile;
  return prob;
}

MpcProblem line_problem(const MpcConfig& cfg, const RobotState& x0, double v_ref) {
  MpcProblem prob;
  prob.x0 = x0;
  for (int i = 0; i <= cfg.horizon; ++i)
    prob.ref_states.push_back({x0.x + v_ref * cfg.step * i, x0.y, 0.0});
  prob.ref_controls.assign(cfg.horizon, {v_ref, 0.0});
  prob.profile = cfg.straight_profile;
  return prob;
}

}  // namespace

TEST_CASE("solve_mpc at a stationary target") {
  MpcConfig cfg;
  const auto prob = stationary_problem(cfg, {3.0, 3.0, 0.4});
  const MpcSolution sol = solve_mpc(prob, cfg);
  CHECK(sol.converged);
  CHECK(sol.cost <= 1e-10);
  for (const auto& u : sol.controls) {
    CHECK(std::abs(u.v) <= 1e-6);
    CHECK(std::abs(u.omega) <= 1e-6);
  }
}

TEST_CASE("solve_mpc beats the all-zero-control candidate on a line reference") {
  MpcConfig cfg;
  const auto prob = line_problem(cfg, {1.0, 1.0, 0.0}, 0.5);
  const MpcSolution sol = solve_mpc(prob, cfg);
  REQUIRE(sol.converged);

  const std::vector<ControlAction> zeros(cfg.horizon);
  const auto idle_states = rollout_single_shooting(prob.x0, zeros, cfg.step);
  const double idle_cost =
      trajectory_cost(idle_states, zeros, prob.ref_states, prob.ref_controls, prob.profile);
  CHECK(sol.cost < idle_cost);
}

TEST_CASE("converged solutions satisfy defects, bounds and the initial pin") {
  MpcConfig cfg;
  std::mt19937_64 rng(31);
  auto u01 = [&] { return static_cast<double>(uniform_u64(rng, 0, 1000000)) / 1e6; };
  for (int trial = 0; trial < 10; ++trial) {
    MpcProblem prob;
    prob.x0 = {u01() * 5, u01() * 5, (u01() - 0.5) * 2};
    std::vector<ControlAction> seed_controls;
    for (int i = 0; i < cfg.horizon; ++i)
      seed_controls.push_back({cfg.v_min + u01() * (cfg.v_max - cfg.v_min),
                               (u01() - 0.5) * 2 * cfg.omega_max});
    prob.ref_states = rollout_single_shooting(prob.x0, seed_controls, cfg.step);
    for (auto& s : prob.ref_states) {
      s.x += (u01() - 0.5) * 0.2;
      s.y += (u01() - 0.5) * 0.2;
    }
    prob.ref_controls.assign(cfg.horizon, {cfg.v_ref, 0.0});
    prob.profile = trial % 2 ? cfg.turn_profile : cfg.straight_profile;

    const MpcSolution sol = solve_mpc(prob, cfg);
    if (!sol.converged) continue;
    CHECK(sol.defect_norm <= cfg.solver.constraint_tol);
    CHECK(std::abs(sol.states[0].x - prob.x0.x) <= cfg.solver.constraint_tol);
    CHECK(std::abs(sol.states[0].y - prob.x0.y) <= cfg.solver.constraint_tol);
    for (const auto& u : sol.controls) {
      CHECK(u.v >= cfg.v_min - 1e-9);
      CHECK(u.v <= cfg.v_max + 1e-9);
      CHECK(std::abs(u.omega) <= cfg.omega_max + 1e-9);
    }
    for (int i = 0; i < cfg.horizon; ++i) {
      const RobotState next = rk4_step(sol.states[i], sol.controls[i], cfg.step);
      CHECK(std::abs(next.x - sol.states[i + 1].x) <= cfg.solver.constraint_tol);
    }
  }
}

TEST_CASE("analytic cost gradient vs central differences (spot check)") {
  MpcConfig cfg;
  cfg.horizon = 4;
  std::mt19937_64 rng(7);
  auto u01 = [&] { return static_cast<double>(uniform_u64(rng, 0, 1000000)) / 1e6; };
  for (int trial = 0; trial < 10; ++trial) {
    MpcProblem prob;
    prob.x0 = {u01(), u01(), u01() - 0.5};
    for (int i = 0; i <= cfg.horizon; ++i)
      prob.ref_states.push_back({u01() * 3, u01() * 3, (u01() - 0.5)});
    prob.ref_controls.assign(cfg.horizon, {0.3, 0.0});
    prob.profile = cfg.straight_profile;

    Eigen::VectorXd w(msnlp::num_vars(cfg.horizon));
    for (int i = 0; i < w.size(); ++i) w[i] = (u01() - 0.5) * 2;
    const Eigen::VectorXd g = msnlp::cost_gradient(prob, cfg, w);
    const double eps = 1e-6;
    for (int i = 0; i < w.size(); ++i) {
      Eigen::VectorXd wp = w, wm = w;
      wp[i] += eps;
      wm[i] -= eps;
      const double fd = (msnlp::cost(prob, cfg, wp) - msnlp::cost(prob, cfg, wm)) / (2 * eps);
      CHECK_THAT(g[i], WithinAbs(fd, 1e-5 * std::max(1.0, std::abs(fd))));
    }
  }
}

TEST_CASE("warm start re-solves cheaply") {
  MpcConfig cfg;
  const auto prob = line_problem(cfg, {0.0, 0.0, 0.0}, 0.5);
  const MpcSolution first = solve_mpc(prob, cfg);
  REQUIRE(first.converged);

  // Advance the problem one step and re-solve from the shifted solution.
  MpcProblem next = line_problem(cfg, {0.5 * cfg.step, 0.0, 0.0}, 0.5);
  const MpcSolution warm = solve_mpc(next, cfg, first);
  const MpcSolution cold = solve_mpc(next, cfg);
  CHECK(warm.converged);
  CHECK(warm.iterations <= cold.iterations);
}
