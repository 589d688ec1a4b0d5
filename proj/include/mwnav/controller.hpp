#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mwnav/geometry.hpp"
#include "mwnav/planner.hpp"

namespace mwnav {

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

struct ControlAction {
  double v = 0.0;      // linear velocity, m/s
  double omega = 0.0;  // angular velocity, rad/s
};

struct WheelCommand {
  double v_left = 0.0;   // rad/s
  double v_right = 0.0;  // rad/s
};

enum class ProfileLabel { STRAIGHT, TURN };

inline const char* to_string(ProfileLabel l) {
  return l == ProfileLabel::STRAIGHT ? "straight" : "turn";
}

/// Diagonal LQR weights: q on (x, y, yaw), r on (v, omega).
struct WeightProfile {
  std::array<double, 3> q{5.0, 5.0, 0.5};
  std::array<double, 2> r{0.05, 0.5};
  ProfileLabel label = ProfileLabel::STRAIGHT;
};

struct SolverSettings {
  int max_iterations = 200;        // total inner iterations across outer loops
  double stationarity_tol = 1e-7;
  double constraint_tol = 1e-8;
  double penalty_initial = 10.0;
  double penalty_growth = 10.0;
};

struct MpcConfig {
  int horizon = 10;        // N
  double step = 0.1;       // h, seconds
  double v_min = -0.3;
  double v_max = 1.0;
  double omega_max = 1.5;
  double v_ref = 0.5;
  double d_base = 0.25;    // wheel conversion base length, m
  double r_wheel = 0.1;    // wheel radius, m
  // Position error dominates: near a stopped reference the position gradient
  // must outweigh the yaw / control cost of the final alignment maneuver, or
  // the robot parks just outside the arrival tolerance.
  WeightProfile straight_profile{{20.0, 20.0, 0.5}, {0.05, 0.5}, ProfileLabel::STRAIGHT};
  // Turning state: linear velocity is expensive and steering cheap, position
  // pull is relaxed so the robot pivots instead of lunging through the corner.
  WeightProfile turn_profile{{1.0, 1.0, 3.0}, {2.0, 3.0}, ProfileLabel::TURN};
  int turn_lookahead = 5;
  double turn_angle_threshold = M_PI / 6.0;
  // Soft state bounds: quadratic penalty outside [bound_lo, bound_hi] on x and y.
  bool soft_state_bounds = false;
  Vec2 bound_lo{0.0, 0.0};
  Vec2 bound_hi{10.0, 10.0};
  double bound_weight = 50.0;
  SolverSettings solver;
};

struct MpcProblem {
  RobotState x0;
  std::vector<RobotState> ref_states;      // N + 1
  std::vector<ControlAction> ref_controls; // N
  WeightProfile profile;
};

struct MpcSolution {
  std::vector<RobotState> states;    // N + 1 predicted
  std::vector<ControlAction> controls;  // N
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double defect_norm = 0.0;
  std::vector<double> multipliers;   // dynamics multipliers, reusable as warm start
};

inline std::array<double, 3> ddmr_derivative(const RobotState& s, const ControlAction& u) {
  return {u.v * std::cos(s.yaw), u.v * std::sin(s.yaw), u.omega};
}

/// Classic RK4 with zero-order-hold control; yaw is left unwrapped.
inline RobotState rk4_step(const RobotState& s, const ControlAction& u, double h) {
  auto add = [](const RobotState& a, const std::array<double, 3>& k, double f) {
    return RobotState{a.x + f * k[0], a.y + f * k[1], a.yaw + f * k[2]};
  };
  const auto k1 = ddmr_derivative(s, u);
  const auto k2 = ddmr_derivative(add(s, k1, h / 2), u);
  const auto k3 = ddmr_derivative(add(s, k2, h / 2), u);
  const auto k4 = ddmr_derivative(add(s, k3, h), u);
  return {s.x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
          s.y + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
          s.yaw + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])};
}

/// Sensitivities of rk4_step: A = dx'/dx (3x3), B = dx'/du (3x2).
inline void rk4_jacobians(const RobotState& s, const ControlAction& u, double h,
                          Eigen::Matrix3d& A, Eigen::Matrix<double, 3, 2>& B) {
  auto fx = [](const RobotState& p, const ControlAction& c) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 2) = -c.v * std::sin(p.yaw);
    m(1, 2) = c.v * std::cos(p.yaw);
    return m;
  };
  auto fu = [](const RobotState& p) {
    Eigen::Matrix<double, 3, 2> m;
    m << std::cos(p.yaw), 0, std::sin(p.yaw), 0, 0, 1;
    return m;
  };
  auto add = [](const RobotState& a, const std::array<double, 3>& k, double f) {
    return RobotState{a.x + f * k[0], a.y + f * k[1], a.yaw + f * k[2]};
  };

  const auto k1 = ddmr_derivative(s, u);
  const RobotState s2 = add(s, k1, h / 2);
  const auto k2 = ddmr_derivative(s2, u);
  const RobotState s3 = add(s, k2, h / 2);
  const auto k3 = ddmr_derivative(s3, u);
  const RobotState s4 = add(s, k3, h);

  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d K1x = fx(s, u);
  const Eigen::Matrix<double, 3, 2> K1u = fu(s);
  const Eigen::Matrix3d K2x = fx(s2, u) * (I + h / 2 * K1x);
  const Eigen::Matrix<double, 3, 2> K2u = fx(s2, u) * (h / 2 * K1u) + fu(s2);
  const Eigen::Matrix3d K3x = fx(s3, u) * (I + h / 2 * K2x);
  const Eigen::Matrix<double, 3, 2> K3u = fx(s3, u) * (h / 2 * K2u) + fu(s3);
  const Eigen::Matrix3d K4x = fx(s4, u) * (I + h * K3x);
  const Eigen::Matrix<double, 3, 2> K4u = fx(s4, u) * (h * K3u) + fu(s4);

  A = I + h / 6 * (K1x + 2 * K2x + 2 * K3x + K4x);
  B = h / 6 * (K1u + 2 * K2u + 2 * K3u + K4u);
}

inline std::vector<RobotState> rollout_single_shooting(const RobotState& x0,
                                                       const std::vector<ControlAction>& controls,
                                                       double h) {
  std::vector<RobotState> states{x0};
  states.reserve(controls.size() + 1);
  for (const auto& u : controls) states.push_back(rk4_step(states.back(), u, h));
  return states;
}

/// Stage-summed LQR tracking cost; yaw residuals are taken after fix_yaw
/// alignment of each (state, reference) pair.
inline double trajectory_cost(const std::vector<RobotState>& states,
                              const std::vector<ControlAction>& controls,
                              const std::vector<RobotState>& ref_states,
                              const std::vector<ControlAction>& ref_controls,
                              const WeightProfile& profile) {
  if (controls.size() + 1 != states.size() || ref_states.size() != states.size() ||
      ref_controls.size() != controls.size())
    throw Error("trajectory_cost: inconsistent lengths");
  double total = 0.0;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const auto [yc, yr] = fix_yaw(wrap_angle(states[i].yaw), wrap_angle(ref_states[i].yaw));
    const double ex = states[i].x - ref_states[i].x;
    const double ey = states[i].y - ref_states[i].y;
    const double eyaw = yc - yr;
    const double ev = controls[i].v - ref_controls[i].v;
    const double ew = controls[i].omega - ref_controls[i].omega;
    total += profile.q[0] * ex * ex + profile.q[1] * ey * ey + profile.q[2] * eyaw * eyaw +
             profile.r[0] * ev * ev + profile.r[1] * ew * ew;
  }
  return total;
}

/// Window of N+1 reference states starting at the path point nearest to the
/// robot; past the path end the final point repeats with zero reference
/// velocity.
inline MpcProblem nearest_reference(const PosePath& path, const RobotState& state, int N,
                                    double v_ref) {
  if (path.empty()) throw Error("nearest_reference: empty path");
  std::size_t best_idx = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const double d = std::hypot(path.points[i].x - state.x, path.points[i].y - state.y);
    if (d < best) {
      best = d;
      best_idx = i;
    }
  }
  MpcProblem prob;
  prob.x0 = state;
  for (int k = 0; k <= N; ++k) {
    const std::size_t i = std::min(best_idx + static_cast<std::size_t>(k), path.points.size() - 1);
    prob.ref_states.push_back({path.points[i].x, path.points[i].y, path.points[i].yaw_ref});
  }
  for (int k = 0; k < N; ++k) {
    const bool moving = best_idx + static_cast<std::size_t>(k) + 1 < path.points.size();
    prob.ref_controls.push_back({moving ? v_ref : 0.0, 0.0});
  }
  return prob;
}

/// TURN when any consecutive reference-yaw jump within the lookahead exceeds
/// the angle threshold, else STRAIGHT.
inline WeightProfile select_weight_profile(const std::vector<RobotState>& ref_states,
                                           const MpcConfig& config, ProfileLabel /*previous*/) {
  const std::size_t n = std::min<std::size_t>(ref_states.size(),
                                              static_cast<std::size_t>(config.turn_lookahead));
  for (std::size_t i = 1; i < n; ++i) {
    const auto [a, b] = fix_yaw(wrap_angle(ref_states[i - 1].yaw), wrap_angle(ref_states[i].yaw));
    if (std::abs(b - a) > config.turn_angle_threshold) return config.turn_profile;
  }
  return config.straight_profile;
}

inline WheelCommand to_wheel_command(const ControlAction& u, const MpcConfig& config) {
  if (config.r_wheel <= 0.0) throw Error("to_wheel_command: wheel radius must be positive");
  return {(u.v - u.omega * config.d_base) / config.r_wheel,
          (u.v + u.omega * config.d_base) / config.r_wheel};
}

}  // namespace mwnav
