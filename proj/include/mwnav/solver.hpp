#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mwnav/controller.hpp"

namespace mwnav {

// Multiple-shooting NLP over W = [u_0..u_{N-1}, x_0..x_N], solved with an
// augmented-Lagrangian outer loop and a damped Gauss-Newton inner loop.
// Control bounds are handled by projection; the dynamics defects and the
// initial-state pin are the equality constraints.

namespace msnlp {

inline int num_vars(int N) { return 2 * N + 3 * (N + 1); }
inline int control_offset(int i) { return 2 * i; }
inline int state_offset(int N, int i) { return 2 * N + 3 * i; }

inline Eigen::VectorXd pack(const std::vector<RobotState>& states,
                            const std::vector<ControlAction>& controls) {
  const int N = static_cast<int>(controls.size());
  Eigen::VectorXd w(num_vars(N));
  for (int i = 0; i < N; ++i) {
    w[control_offset(i)] = controls[i].v;
    w[control_offset(i) + 1] = controls[i].omega;
  }
  for (int i = 0; i <= N; ++i) {
    w[state_offset(N, i)] = states[i].x;
    w[state_offset(N, i) + 1] = states[i].y;
    w[state_offset(N, i) + 2] = states[i].yaw;
  }
  return w;
}

inline void unpack(const Eigen::VectorXd& w, int N, std::vector<RobotState>& states,
                   std::vector<ControlAction>& controls) {
  controls.resize(N);
  states.resize(N + 1);
  for (int i = 0; i < N; ++i)
    controls[i] = {w[control_offset(i)], w[control_offset(i) + 1]};
  for (int i = 0; i <= N; ++i)
    states[i] = {w[state_offset(N, i)], w[state_offset(N, i) + 1], w[state_offset(N, i) + 2]};
}

/// Tracking cost (plus soft state-bound penalty) as a function of W.
inline double cost(const MpcProblem& prob, const MpcConfig& cfg, const Eigen::VectorXd& w) {
  const int N = cfg.horizon;
  std::vector<RobotState> xs;
  std::vector<ControlAction> us;
  unpack(w, N, xs, us);
  double total = trajectory_cost(xs, us, prob.ref_states, prob.ref_controls, prob.profile);
  if (cfg.soft_state_bounds) {
    for (int i = 0; i <= N; ++i) {
      const double x = w[state_offset(N, i)];
      const double y = w[state_offset(N, i) + 1];
      const double vx = std::max({0.0, cfg.bound_lo.x - x, x - cfg.bound_hi.x});
      const double vy = std::max({0.0, cfg.bound_lo.y - y, y - cfg.bound_hi.y});
      total += cfg.bound_weight * (vx * vx + vy * vy);
    }
  }
  return total;
}

/// Analytic gradient of `cost` with respect to W. The fix_yaw alignment is a
/// locally constant shift, so the yaw residual has unit slope a.e.
inline Eigen::VectorXd cost_gradient(const MpcProblem& prob, const MpcConfig& cfg,
                                     const Eigen::VectorXd& w) {
  const int N = cfg.horizon;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
  const auto& q = prob.profile.q;
  const auto& r = prob.profile.r;
  for (int i = 0; i < N; ++i) {
    const int xo = state_offset(N, i);
    const int uo = control_offset(i);
    const auto [yc, yr] =
        fix_yaw(wrap_angle(w[xo + 2]), wrap_angle(prob.ref_states[i].yaw));
    g[xo] += 2 * q[0] * (w[xo] - prob.ref_states[i].x);
    g[xo + 1] += 2 * q[1] * (w[xo + 1] - prob.ref_states[i].y);
    g[xo + 2] += 2 * q[2] * (yc - yr);
    g[uo] += 2 * r[0] * (w[uo] - prob.ref_controls[i].v);
    g[uo + 1] += 2 * r[1] * (w[uo + 1] - prob.ref_controls[i].omega);
  }
  if (cfg.soft_state_bounds) {
    for (int i = 0; i <= N; ++i) {
      const int xo = state_offset(N, i);
      for (int k = 0; k < 2; ++k) {
        const double v = w[xo + k];
        const double lo = k == 0 ? cfg.bound_lo.x : cfg.bound_lo.y;
        const double hi = k == 0 ? cfg.bound_hi.x : cfg.bound_hi.y;
        if (v < lo) g[xo + k] += 2 * cfg.bound_weight * (v - lo);
        if (v > hi) g[xo + k] += 2 * cfg.bound_weight * (v - hi);
      }
    }
  }
  return g;
}

/// Equality constraints: c_0 = xbar0 - x_0, c_{i+1} = rk4(x_i, u_i) - x_{i+1}.
inline Eigen::VectorXd constraints(const MpcProblem& prob, const MpcConfig& cfg,
                                   const Eigen::VectorXd& w) {
  const int N = cfg.horizon;
  Eigen::VectorXd c(3 * (N + 1));
  c[0] = prob.x0.x - w[state_offset(N, 0)];
  c[1] = prob.x0.y - w[state_offset(N, 0) + 1];
  c[2] = prob.x0.yaw - w[state_offset(N, 0) + 2];
  for (int i = 0; i < N; ++i) {
    const int xo = state_offset(N, i);
    const RobotState xi{w[xo], w[xo + 1], w[xo + 2]};
    const ControlAction ui{w[control_offset(i)], w[control_offset(i) + 1]};
    const RobotState next = rk4_step(xi, ui, cfg.step);
    const int xn = state_offset(N, i + 1);
    c[3 * (i + 1)] = next.x - w[xn];
    c[3 * (i + 1) + 1] = next.y - w[xn + 1];
    c[3 * (i + 1) + 2] = next.yaw - w[xn + 2];
  }
  return c;
}

inline void project_controls(Eigen::VectorXd& w, const MpcConfig& cfg) {
  for (int i = 0; i < cfg.horizon; ++i) {
    const int uo = control_offset(i);
    w[uo] = std::clamp(w[uo], cfg.v_min, cfg.v_max);
    w[uo + 1] = std::clamp(w[uo + 1], -cfg.omega_max, cfg.omega_max);
  }
}

struct AlResiduals {
  Eigen::VectorXd r;       // stacked residuals, Phi = ||r||^2
  Eigen::MatrixXd jac;     // d r / d W
};

/// Residual form of the augmented-Lagrangian objective
///   Phi(W) = J(W) + (mu/2) ||c(W) + lambda/mu||^2.
inline AlResiduals al_residuals(const MpcProblem& prob, const MpcConfig& cfg,
                                const Eigen::VectorXd& w, const Eigen::VectorXd& lambda,
                                double mu) {
  const int N = cfg.horizon;
  const int nv = num_vars(N);
  const int n_cost = 5 * N;
  const int n_bound = cfg.soft_state_bounds ? 2 * (N + 1) : 0;
  const int n_con = 3 * (N + 1);
  AlResiduals out;
  out.r = Eigen::VectorXd::Zero(n_cost + n_bound + n_con);
  out.jac = Eigen::MatrixXd::Zero(n_cost + n_bound + n_con, nv);

  const auto& q = prob.profile.q;
  const auto& rw = prob.profile.r;
  for (int i = 0; i < N; ++i) {
    const int xo = state_offset(N, i);
    const int uo = control_offset(i);
    const int ro = 5 * i;
    const auto [yc, yr] =
        fix_yaw(wrap_angle(w[xo + 2]), wrap_angle(prob.ref_states[i].yaw));
    const double sq0 = std::sqrt(q[0]), sq1 = std::sqrt(q[1]), sq2 = std::sqrt(q[2]);
    const double sr0 = std::sqrt(rw[0]), sr1 = std::sqrt(rw[1]);
    out.r[ro] = sq0 * (w[xo] - prob.ref_states[i].x);
    out.r[ro + 1] = sq1 * (w[xo + 1] - prob.ref_states[i].y);
    out.r[ro + 2] = sq2 * (yc - yr);
    out.r[ro + 3] = sr0 * (w[uo] - prob.ref_controls[i].v);
    out.r[ro + 4] = sr1 * (w[uo + 1] - prob.ref_controls[i].omega);
    out.jac(ro, xo) = sq0;
    out.jac(ro + 1, xo + 1) = sq1;
    out.jac(ro + 2, xo + 2) = sq2;
    out.jac(ro + 3, uo) = sr0;
    out.jac(ro + 4, uo + 1) = sr1;
  }
  if (cfg.soft_state_bounds) {
    const double sw = std::sqrt(cfg.bound_weight);
    for (int i = 0; i <= N; ++i) {
      const int xo = state_offset(N, i);
      for (int k = 0; k < 2; ++k) {
        const double v = w[xo + k];
        const double lo = k == 0 ? cfg.bound_lo.x : cfg.bound_lo.y;
        const double hi = k == 0 ? cfg.bound_hi.x : cfg.bound_hi.y;
        double viol = 0.0;
        if (v < lo) viol = v - lo;
        if (v > hi) viol = v - hi;
        const int ro = n_cost + 2 * i + k;
        out.r[ro] = sw * viol;
        if (viol != 0.0) out.jac(ro, xo + k) = sw;
      }
    }
  }

  const Eigen::VectorXd c = constraints(prob, cfg, w);
  const double smu = std::sqrt(mu / 2.0);
  const int base = n_cost + n_bound;
  // c_0 rows: -I on x_0.
  for (int k = 0; k < 3; ++k) {
    out.r[base + k] = smu * (c[k] + lambda[k] / mu);
    out.jac(base + k, state_offset(N, 0) + k) = -smu;
  }
  Eigen::Matrix3d A;
  Eigen::Matrix<double, 3, 2> B;
  for (int i = 0; i < N; ++i) {
    const int xo = state_offset(N, i);
    const int uo = control_offset(i);
    const int xn = state_offset(N, i + 1);
    const RobotState xi{w[xo], w[xo + 1], w[xo + 2]};
    const ControlAction ui{w[uo], w[uo + 1]};
    rk4_jacobians(xi, ui, cfg.step, A, B);
    for (int k = 0; k < 3; ++k) {
      const int ro = base + 3 * (i + 1) + k;
      out.r[ro] = smu * (c[3 * (i + 1) + k] + lambda[3 * (i + 1) + k] / mu);
      for (int j = 0; j < 3; ++j) out.jac(ro, xo + j) = smu * A(k, j);
      for (int j = 0; j < 2; ++j) out.jac(ro, uo + j) = smu * B(k, j);
      out.jac(ro, xn + k) = -smu;
    }
  }
  return out;
}

inline double projected_stationarity(const Eigen::VectorXd& w, const Eigen::VectorXd& grad,
                                     const MpcConfig& cfg) {
  Eigen::VectorXd stepped = w - grad;
  project_controls(stepped, cfg);
  return (w - stepped).lpNorm<Eigen::Infinity>();
}

/// Second derivatives of one rk4_step output triple with respect to
/// z = (x_i, y_i, yaw_i, v_i, omega_i), by central differences of the analytic
/// Jacobians. T[k](a, b) = d^2 rk4_k / dz_a dz_b.
inline void rk4_stage_hessians(const RobotState& x, const ControlAction& u, double h,
                               Eigen::Matrix<double, 5, 5> T[3]) {
  for (int k = 0; k < 3; ++k) T[k].setZero();
  Eigen::Matrix3d Ap, Am;
  Eigen::Matrix<double, 3, 2> Bp, Bm;
  for (int a = 0; a < 5; ++a) {
    RobotState xp = x, xm = x;
    ControlAction up = u, um = u;
    double base = a < 3 ? (a == 0 ? x.x : a == 1 ? x.y : x.yaw) : (a == 3 ? u.v : u.omega);
    const double eps = 1e-5 * (1.0 + std::abs(base));
    switch (a) {
      case 0: xp.x += eps; xm.x -= eps; break;
      case 1: xp.y += eps; xm.y -= eps; break;
      case 2: xp.yaw += eps; xm.yaw -= eps; break;
      case 3: up.v += eps; um.v -= eps; break;
      case 4: up.omega += eps; um.omega -= eps; break;
    }
    rk4_jacobians(xp, up, h, Ap, Bp);
    rk4_jacobians(xm, um, h, Am, Bm);
    const double inv = 1.0 / (2.0 * eps);
    for (int k = 0; k < 3; ++k)
      for (int b = 0; b < 5; ++b) {
        const double dp = b < 3 ? Ap(k, b) : Bp(k, b - 3);
        const double dm = b < 3 ? Am(k, b) : Bm(k, b - 3);
        T[k](a, b) = (dp - dm) * inv;
      }
  }
  // Symmetrize away finite-difference noise.
  for (int k = 0; k < 3; ++k) T[k] = 0.5 * (T[k] + T[k].transpose()).eval();
}

/// Exact Hessian of Phi: 2 J^T J plus the constraint curvature weighted by the
/// first-order multiplier estimate lambda_hat = lambda + mu c. The tracking and
/// bound rows are (piecewise) linear in W, so only dynamics rows contribute.
inline Eigen::MatrixXd al_hessian(const MpcProblem& prob, const MpcConfig& cfg,
                                  const Eigen::VectorXd& w, const Eigen::VectorXd& lambda,
                                  double mu, const AlResiduals& res) {
  const int N = cfg.horizon;
  Eigen::MatrixXd H = 2.0 * res.jac.transpose() * res.jac;
  const Eigen::VectorXd c = constraints(prob, cfg, w);
  Eigen::Matrix<double, 5, 5> T[3];
  for (int i = 0; i < N; ++i) {
    const int xo = state_offset(N, i);
    const int uo = control_offset(i);
    const RobotState xi{w[xo], w[xo + 1], w[xo + 2]};
    const ControlAction ui{w[uo], w[uo + 1]};
    rk4_stage_hessians(xi, ui, cfg.step, T);
    int idx[5] = {xo, xo + 1, xo + 2, uo, uo + 1};
    for (int k = 0; k < 3; ++k) {
      const double lhat = lambda[3 * (i + 1) + k] + mu * c[3 * (i + 1) + k];
      if (lhat == 0.0) continue;
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) H(idx[a], idx[b]) += lhat * T[k](a, b);
    }
  }
  return H;
}

}  // namespace msnlp

inline MpcSolution solve_mpc(const MpcProblem& prob, const MpcConfig& cfg,
                             const std::optional<MpcSolution>& warm_start = std::nullopt) {
  const int N = cfg.horizon;
  if (static_cast<int>(prob.ref_states.size()) != N + 1 ||
      static_cast<int>(prob.ref_controls.size()) != N)
    throw Error("solve_mpc: reference lengths do not match the horizon");

  const int n_con = 3 * (N + 1);
  Eigen::VectorXd w;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n_con);
  if (warm_start && static_cast<int>(warm_start->controls.size()) == N) {
    // Shift the previous solution one stage, repeating the terminal stage.
    std::vector<ControlAction> us(warm_start->controls.begin() + 1, warm_start->controls.end());
    us.push_back(warm_start->controls.back());
    std::vector<RobotState> xs(warm_start->states.begin() + 1, warm_start->states.end());
    xs.push_back(rk4_step(xs.back(), us.back(), cfg.step));
    w = msnlp::pack(xs, us);
    if (static_cast<int>(warm_start->multipliers.size()) == n_con)
      for (int k = 0; k < n_con; ++k) lambda[k] = warm_start->multipliers[k];
  } else {
    std::vector<RobotState> xs = prob.ref_states;
    std::vector<ControlAction> us = prob.ref_controls;
    xs[0] = prob.x0;
    w = msnlp::pack(xs, us);
  }
  msnlp::project_controls(w, cfg);

  double mu = cfg.solver.penalty_initial;
  int iterations = 0;
  bool converged = false;
  double prev_cnorm = std::numeric_limits<double>::infinity();

  constexpr int kMaxOuter = 40;
  for (int outer = 0; outer < kMaxOuter && !converged; ++outer) {
    // Damped Newton on the augmented Lagrangian. Gauss-Newton alone converges
    // too slowly here: the tracking residuals stay large at the optimum, so
    // the constraint-curvature term (weighted by lambda + mu c) matters.
    double damping = 1e-8;
    for (int inner = 0; inner < 60; ++inner) {
      if (iterations >= cfg.solver.max_iterations) break;
      const auto res = msnlp::al_residuals(prob, cfg, w, lambda, mu);
      const Eigen::VectorXd grad = 2.0 * res.jac.transpose() * res.r;
      if (msnlp::projected_stationarity(w, grad, cfg) <= cfg.solver.stationarity_tol) break;

      // Active-set reduction: controls pinned at a bound with the gradient
      // pushing outward stay fixed; Newton runs on the free variables so the
      // projection cannot cancel the computed descent direction.
      std::vector<int> free_idx;
      free_idx.reserve(w.size());
      for (int j = 0; j < w.size(); ++j) {
        bool active = false;
        if (j < 2 * N) {
          const bool is_v = j % 2 == 0;
          const double lo = is_v ? cfg.v_min : -cfg.omega_max;
          const double hi = is_v ? cfg.v_max : cfg.omega_max;
          active = (w[j] <= lo + 1e-12 && grad[j] > 0) || (w[j] >= hi - 1e-12 && grad[j] < 0);
        }
        if (!active) free_idx.push_back(j);
      }
      const int nf = static_cast<int>(free_idx.size());
      const Eigen::MatrixXd H = msnlp::al_hessian(prob, cfg, w, lambda, mu, res);
      Eigen::MatrixXd Hf(nf, nf);
      Eigen::VectorXd gf(nf);
      for (int a = 0; a < nf; ++a) {
        gf[a] = grad[free_idx[a]];
        for (int b = 0; b < nf; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
      }
      bool stepped = false;
      for (int attempt = 0; attempt < 10 && !stepped; ++attempt) {
        Eigen::MatrixXd Hd = Hf;
        Hd.diagonal().array() += damping;
        const Eigen::VectorXd df = Hd.ldlt().solve(-gf);
        const double slope = gf.dot(df);
        if (!df.allFinite() || slope >= 0) {
          damping = std::max(damping * 10.0, 1e-6);
          continue;
        }
        Eigen::VectorXd d = Eigen::VectorXd::Zero(w.size());
        for (int a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
        const double phi0 = res.r.squaredNorm();
        double alpha = 1.0;
        for (int ls = 0; ls < 25; ++ls) {
          Eigen::VectorXd wt = w + alpha * d;
          msnlp::project_controls(wt, cfg);
          const auto rt = msnlp::al_residuals(prob, cfg, wt, lambda, mu);
          if (rt.r.squaredNorm() <= phi0 + 1e-4 * alpha * slope) {
            w = wt;
            stepped = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!stepped) damping = std::max(damping * 10.0, 1e-6);
      }
      ++iterations;
      if (!stepped) break;
      damping = std::max(damping / 10.0, 1e-8);
    }

    const Eigen::VectorXd c = msnlp::constraints(prob, cfg, w);
    const double cnorm = c.lpNorm<Eigen::Infinity>();
    const auto res = msnlp::al_residuals(prob, cfg, w, lambda, mu);
    const Eigen::VectorXd grad = 2.0 * res.jac.transpose() * res.r;
    const double stat = msnlp::projected_stationarity(w, grad, cfg);
    if (cnorm <= cfg.solver.constraint_tol && stat <= cfg.solver.stationarity_tol) {
      converged = true;
      break;
    }
    if (iterations >= cfg.solver.max_iterations) break;
    lambda += mu * c;
    // Growing mu past the point of feasibility only degrades conditioning;
    // the multiplier updates finish the job once cnorm is at tolerance.
    if (cnorm > std::max(0.25 * prev_cnorm, cfg.solver.constraint_tol))
      mu = std::min(mu * cfg.solver.penalty_growth, 1e6);
    prev_cnorm = cnorm;
  }

  MpcSolution sol;
  msnlp::unpack(w, N, sol.states, sol.controls);
  sol.cost = msnlp::cost(prob, cfg, w);
  sol.iterations = iterations;
  sol.converged = converged;
  sol.multipliers.assign(lambda.data(), lambda.data() + lambda.size());
  double defect = 0.0;
  for (int i = 0; i < N; ++i) {
    const RobotState next = rk4_step(sol.states[i], sol.controls[i], cfg.step);
    defect = std::max({defect, std::abs(next.x - sol.states[i + 1].x),
                       std::abs(next.y - sol.states[i + 1].y),
                       std::abs(next.yaw - sol.states[i + 1].yaw)});
  }
  sol.defect_norm = defect;
  return sol;
}

}  // namespace mwnav
