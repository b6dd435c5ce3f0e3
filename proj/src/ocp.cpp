#include "gbr/ocp.hpp"

#include <algorithm>
#include <cmath>

#include "gbr/errors.hpp"

namespace gbr {

namespace {

double mean_kc_sq(const std::vector<DriverControl>& c) {
  double s = 0.0;
  for (const DriverControl& v : c) s += v.kc * v.kc;
  return s / static_cast<double>(c.size());
}

double trapezoid(const std::vector<double>& values, double h) {
  double s = 0.0;
  for (size_t k = 0; k + 1 < values.size(); ++k) s += 0.5 * h * (values[k] + values[k + 1]);
  return s;
}

}  // namespace

std::pair<double, CostBreakdown> cost_guidance(const Trajectory& traj, const CostWeights& weights,
                                               const Vec2& target) {
  const int n = traj.steps();
  const int evaders = traj.evaders();
  CostBreakdown b;
  for (const Vec2& ue : traj.back().evader_pos) {
    b.position_error_sq += (ue - target).squaredNorm() / evaders;
    b.position_error += (ue - target).norm() / evaders;
  }
  std::vector<double> run(n + 1);
  for (int k = 0; k <= n; ++k) run[k] = mean_kc_sq(traj.controls[k]);
  b.running_integral = trapezoid(run, traj.dt());
  b.time_term = traj.t_f;
  b.total = b.position_error_sq + weights.delta1 * b.running_integral + weights.delta2 * b.time_term;
  return {b.total, b};
}

std::pair<double, CostBreakdown> cost_stabilization(const Trajectory& traj,
                                                    const CostWeights& weights,
                                                    const Vec2& target) {
  const int n = traj.steps();
  const int evaders = traj.evaders();
  const int drivers = traj.drivers();
  CostBreakdown b;
  std::vector<double> track(n + 1), state(n + 1), run(n + 1);
  for (int k = 0; k <= n; ++k) {
    const SystemState& s = traj.states[k];
    double tr = 0.0, st = 0.0;
    for (int i = 0; i < evaders; ++i) {
      tr += (s.evader_pos[i] - target).squaredNorm() / evaders;
      st += s.evader_vel[i].squaredNorm() / evaders;
    }
    for (int j = 0; j < drivers; ++j)
      st += ((s.driver_pos[j] - target).squaredNorm() + s.driver_vel[j].squaredNorm()) / drivers;
    track[k] = tr;
    state[k] = st;
    run[k] = mean_kc_sq(traj.controls[k]);
  }
  b.tracking_integral = trapezoid(track, traj.dt());
  b.state_integral = trapezoid(state, traj.dt());
  b.running_integral = trapezoid(run, traj.dt());
  b.time_term = traj.t_f;
  for (const Vec2& ue : traj.back().evader_pos)
    b.position_error += (ue - target).norm() / evaders;
  b.total = b.tracking_integral + weights.delta3 * b.state_integral +
            weights.delta1 * b.running_integral + weights.delta2 * b.time_term;
  return {b.total, b};
}

// --- s-space discrete transcription --------------------------------------
//
// States x_k live on the uniform s-grid, s_k = k/n, and one RK4 step of
// dx/ds = sigma_k F(x, kappa(s)) advances segment k with its own speed
// sigma_k (uniform speed recovers the plain t-grid). Controls are the node
// values, linearly interpolated, so the stage controls of step k are
// (theta_k, (theta_k + theta_{k+1})/2, theta_{k+1}).

namespace {

struct Transcription {
  int m = 0, n_agents = 0, dim = 0, n = 0;
  double h = 0.0;
  const OcpProblem* p = nullptr;

  double sigma_of_step(const Eigen::VectorXd& speeds, int k) const {
    if (speeds.size() == 1) return speeds[0];
    return speeds[static_cast<int>(speeds.size()) * k / n];
  }
  int segment_of_step(const Eigen::VectorXd& speeds, int k) const {
    return speeds.size() == 1 ? 0 : static_cast<int>(speeds.size()) * k / n;
  }
  double total_time(const Eigen::VectorXd& speeds) const {
    if (speeds.size() == 1) return speeds[0];
    return speeds.mean();
  }

  std::vector<DriverControl> controls_at(const Eigen::MatrixXd& kc, const Eigen::MatrixXd& kp,
                                         int k, int k2, double w) const {
    std::vector<DriverControl> c(m);
    for (int j = 0; j < m; ++j) {
      c[j].kp = (1.0 - w) * kp(j, k) + w * kp(j, k2);
      c[j].kc = (1.0 - w) * kc(j, k) + w * kc(j, k2);
    }
    return c;
  }

  // Running integrand at node k and its state gradient.
  double running(const Eigen::VectorXd& x, const Eigen::MatrixXd& kc, int k) const {
    const CostWeights& wts = p->weights;
    double L = 0.0;
    for (int j = 0; j < m; ++j) L += wts.delta1 / m * kc(j, k) * kc(j, k);
    if (p->kind == CostKind::Stabilization) {
      const int n_e = p->initial.evaders();
      const int voff = 2 * (m + n_e);
      for (int i = 0; i < n_e; ++i) {
        const Vec2 ue = x.segment<2>(2 * (m + i));
        const Vec2 ve = x.segment<2>(voff + 2 * (m + i));
        L += (ue - p->target).squaredNorm() / n_e + wts.delta3 * ve.squaredNorm() / n_e;
      }
      for (int j = 0; j < m; ++j) {
        const Vec2 ud = x.segment<2>(2 * j);
        const Vec2 vd = x.segment<2>(voff + 2 * j);
        L += wts.delta3 * ((ud - p->target).squaredNorm() + vd.squaredNorm()) / m;
      }
    }
    return L;
  }

  Eigen::VectorXd running_dx(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    if (p->kind != CostKind::Stabilization) return g;
    const CostWeights& wts = p->weights;
    const int n_e = p->initial.evaders();
    const int voff = 2 * (m + n_e);
    for (int i = 0; i < n_e; ++i) {
      g.segment<2>(2 * (m + i)) = 2.0 / n_e * (x.segment<2>(2 * (m + i)) - p->target);
      g.segment<2>(voff + 2 * (m + i)) = 2.0 * wts.delta3 / n_e * x.segment<2>(voff + 2 * (m + i));
    }
    for (int j = 0; j < m; ++j) {
      g.segment<2>(2 * j) = 2.0 * wts.delta3 / m * (x.segment<2>(2 * j) - p->target);
      g.segment<2>(voff + 2 * j) = 2.0 * wts.delta3 / m * x.segment<2>(voff + 2 * j);
    }
    return g;
  }

  double terminal(const Eigen::VectorXd& x) const {
    if (p->kind != CostKind::Guidance) return 0.0;
    const int n_e = p->initial.evaders();
    double phi = 0.0;
    for (int i = 0; i < n_e; ++i)
      phi += (x.segment<2>(2 * (m + i)) - p->target).squaredNorm() / n_e;
    return phi;
  }

  Eigen::VectorXd terminal_dx(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    if (p->kind != CostKind::Guidance) return g;
    const int n_e = p->initial.evaders();
    for (int i = 0; i < n_e; ++i)
      g.segment<2>(2 * (m + i)) = 2.0 / n_e * (x.segment<2>(2 * (m + i)) - p->target);
    return g;
  }
};

Transcription make_transcription(const OcpProblem& p) {
  Transcription t;
  t.p = &p;
  t.m = p.initial.drivers();
  t.n_agents = t.m + p.initial.evaders();
  t.dim = 4 * t.n_agents;
  t.n = p.n_steps;
  t.h = 1.0 / p.n_steps;
  return t;
}

}  // namespace

OcpForward ocp_forward(const OcpProblem& p, const Eigen::MatrixXd& kc, const Eigen::MatrixXd& kp,
                       const Eigen::VectorXd& speeds) {
  const Transcription tr = make_transcription(p);
  const int m = tr.m, n = tr.n;
  const int n_e = p.initial.evaders();
  OcpForward out;
  out.states.reserve(n + 1);
  Eigen::VectorXd x = pack_state(p.initial);
  out.states.push_back(x);

  double run_weighted = 0.0;   // integral of the full running integrand
  double run_raw = 0.0;        // raw control effort integral
  double track_raw = 0.0, state_raw = 0.0;
  auto node_raw = [&](const Eigen::VectorXd& xx, int k, double& rr, double& tt, double& ss) {
    rr = 0.0;
    for (int j = 0; j < m; ++j) rr += kc(j, k) * kc(j, k);
    rr /= m;
    tt = 0.0;
    ss = 0.0;
    const int voff = 2 * (m + n_e);
    for (int i = 0; i < n_e; ++i) {
      tt += (xx.segment<2>(2 * (m + i)) - p.target).squaredNorm() / n_e;
      ss += xx.segment<2>(voff + 2 * (m + i)).squaredNorm() / n_e;
    }
    for (int j = 0; j < m; ++j) {
      ss += ((xx.segment<2>(2 * j) - p.target).squaredNorm() +
             xx.segment<2>(voff + 2 * j).squaredNorm()) /
            m;
    }
  };

  double L_prev = tr.running(x, kc, 0);
  double rr_prev, tt_prev, ss_prev;
  node_raw(x, 0, rr_prev, tt_prev, ss_prev);
  for (int k = 0; k < n; ++k) {
    const double sigma = tr.sigma_of_step(speeds, k);
    const auto c1 = tr.controls_at(kc, kp, k, k + 1, 0.0);
    const auto c2 = tr.controls_at(kc, kp, k, k + 1, 0.5);
    const auto c4 = tr.controls_at(kc, kp, k, k + 1, 1.0);
    const Eigen::VectorXd k1 = sigma * rhs_flat(x, c1, m, n_e, p.kernels, p.friction, p.dynamics);
    const Eigen::VectorXd xa = x + 0.5 * tr.h * k1;
    const Eigen::VectorXd k2 = sigma * rhs_flat(xa, c2, m, n_e, p.kernels, p.friction, p.dynamics);
    const Eigen::VectorXd xb = x + 0.5 * tr.h * k2;
    const Eigen::VectorXd k3 = sigma * rhs_flat(xb, c2, m, n_e, p.kernels, p.friction, p.dynamics);
    const Eigen::VectorXd xc = x + tr.h * k3;
    const Eigen::VectorXd k4 = sigma * rhs_flat(xc, c4, m, n_e, p.kernels, p.friction, p.dynamics);
    x = x + (tr.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw DivergenceError("ocp forward: non-finite state", k * tr.h);
    out.states.push_back(x);

    const double L_next = tr.running(x, kc, k + 1);
    run_weighted += 0.5 * sigma * tr.h * (L_prev + L_next);
    L_prev = L_next;
    double rr, tt, ss;
    node_raw(x, k + 1, rr, tt, ss);
    run_raw += 0.5 * sigma * tr.h * (rr_prev + rr);
    track_raw += 0.5 * sigma * tr.h * (tt_prev + tt);
    state_raw += 0.5 * sigma * tr.h * (ss_prev + ss);
    rr_prev = rr;
    tt_prev = tt;
    ss_prev = ss;
  }

  const double t_f = tr.total_time(speeds);
  out.breakdown.position_error_sq = tr.terminal(x);
  for (int i = 0; i < n_e; ++i)
    out.breakdown.position_error += (x.segment<2>(2 * (m + i)) - p.target).norm() / n_e;
  out.breakdown.running_integral = run_raw;
  out.breakdown.tracking_integral = track_raw;
  out.breakdown.state_integral = state_raw;
  out.breakdown.time_term = t_f;
  out.cost = tr.terminal(x) + run_weighted + p.weights.delta2 * t_f;
  out.breakdown.total = out.cost;
  return out;
}

AdjointResult adjoint_solve(const OcpProblem& p, const Eigen::MatrixXd& kc,
                            const Eigen::MatrixXd& kp, const Eigen::VectorXd& speeds) {
  const Transcription tr = make_transcription(p);
  const int m = tr.m, n = tr.n, dim = tr.dim;
  const int n_e = p.initial.evaders();
  const OcpForward fwd = ocp_forward(p, kc, kp, speeds);

  AdjointResult out;
  out.cost = fwd.cost;
  out.breakdown = fwd.breakdown;
  out.costate.resize(dim, n + 1);
  out.grad_kc = Eigen::MatrixXd::Zero(m, n + 1);
  out.grad_kp = Eigen::MatrixXd::Zero(m, n + 1);
  out.grad_speeds = Eigen::VectorXd::Zero(speeds.size());

  // Node weights of the trapezoidal running cost (in s).
  std::vector<double> Ls(n + 1);
  for (int k = 0; k <= n; ++k) Ls[k] = tr.running(fwd.states[k], kc, k);

  // Direct (non-dynamic) pieces of the gradient.
  for (int k = 0; k <= n; ++k) {
    const double w_lo = k > 0 ? 0.5 * tr.h * tr.sigma_of_step(speeds, k - 1) : 0.0;
    const double w_hi = k < n ? 0.5 * tr.h * tr.sigma_of_step(speeds, k) : 0.0;
    for (int j = 0; j < m; ++j)
      out.grad_kc(j, k) += (w_lo + w_hi) * 2.0 * p.weights.delta1 / m * kc(j, k);
  }
  for (int k = 0; k < n; ++k) {
    const int seg = tr.segment_of_step(speeds, k);
    out.grad_speeds[seg] += 0.5 * tr.h * (Ls[k] + Ls[k + 1]) + p.weights.delta2 * tr.h;
  }

  Eigen::VectorXd lam = tr.terminal_dx(fwd.states[n]);
  {
    const double w_n = 0.5 * tr.h * tr.sigma_of_step(speeds, n - 1);
    lam += w_n * tr.running_dx(fwd.states[n]);
  }
  out.costate.col(n) = lam;

  for (int k = n - 1; k >= 0; --k) {
    const double sigma = tr.sigma_of_step(speeds, k);
    const int seg = tr.segment_of_step(speeds, k);
    const Eigen::VectorXd& x = fwd.states[k];
    const auto c1 = tr.controls_at(kc, kp, k, k + 1, 0.0);
    const auto c2 = tr.controls_at(kc, kp, k, k + 1, 0.5);
    const auto c4 = tr.controls_at(kc, kp, k, k + 1, 1.0);
    // Recompute the stage states of this step.
    const Eigen::VectorXd f1 = rhs_flat(x, c1, m, n_e, p.kernels, p.friction, p.dynamics);
    const Eigen::VectorXd xa = x + 0.5 * tr.h * sigma * f1;
    const Eigen::VectorXd f2 = rhs_flat(xa, c2, m, n_e, p.kernels, p.friction, p.dynamics);
    const Eigen::VectorXd xb = x + 0.5 * tr.h * sigma * f2;
    const Eigen::VectorXd f3 = rhs_flat(xb, c2, m, n_e, p.kernels, p.friction, p.dynamics);
    const Eigen::VectorXd xc = x + tr.h * sigma * f3;
    const Eigen::VectorXd f4 = rhs_flat(xc, c4, m, n_e, p.kernels, p.friction, p.dynamics);

    const Eigen::VectorXd bk4 = (tr.h / 6.0) * lam;
    const Eigen::VectorXd bxc =
        sigma * (rhs_jacobian(xc, c4, m, n_e, p.kernels, p.friction, p.dynamics).transpose() * bk4);
    const Eigen::VectorXd bk3 = (tr.h / 3.0) * lam + tr.h * bxc;
    const Eigen::VectorXd bxb =
        sigma * (rhs_jacobian(xb, c2, m, n_e, p.kernels, p.friction, p.dynamics).transpose() * bk3);
    const Eigen::VectorXd bk2 = (tr.h / 3.0) * lam + 0.5 * tr.h * bxb;
    const Eigen::VectorXd bxa =
        sigma * (rhs_jacobian(xa, c2, m, n_e, p.kernels, p.friction, p.dynamics).transpose() * bk2);
    const Eigen::VectorXd bk1 = (tr.h / 6.0) * lam + 0.5 * tr.h * bxa;
    Eigen::VectorXd lam_prev =
        lam + bxa + bxb + bxc +
        sigma * (rhs_jacobian(x, c1, m, n_e, p.kernels, p.friction, p.dynamics).transpose() * bk1);

    out.grad_speeds[seg] += f1.dot(bk1) + f2.dot(bk2) + f3.dot(bk3) + f4.dot(bk4);

    for (int j = 0; j < m; ++j) {
      const double mid_kc = 0.5 * sigma *
                            (rhs_dkc(xa, j, m, n_e).dot(bk2) + rhs_dkc(xb, j, m, n_e).dot(bk3));
      out.grad_kc(j, k) += sigma * rhs_dkc(x, j, m, n_e).dot(bk1) + mid_kc;
      out.grad_kc(j, k + 1) += sigma * rhs_dkc(xc, j, m, n_e).dot(bk4) + mid_kc;
      if (p.optimize_kp) {
        const double mid_kp = 0.5 * sigma *
                              (rhs_dkp(xa, j, m, n_e, p.kernels).dot(bk2) +
                               rhs_dkp(xb, j, m, n_e, p.kernels).dot(bk3));
        out.grad_kp(j, k) += sigma * rhs_dkp(x, j, m, n_e, p.kernels).dot(bk1) + mid_kp;
        out.grad_kp(j, k + 1) += sigma * rhs_dkp(xc, j, m, n_e, p.kernels).dot(bk4) + mid_kp;
      }
    }

    // Arriving at node k: add its running-cost gradient weight.
    const double w_lo = k > 0 ? 0.5 * tr.h * tr.sigma_of_step(speeds, k - 1) : 0.0;
    const double w_hi = 0.5 * tr.h * sigma;
    lam = lam_prev + (w_lo + w_hi) * tr.running_dx(x);
    out.costate.col(k) = lam;
  }

  // Sum of the per-segment sensitivities: with a uniform profile every
  // segment speed equals t_f, so dJ/dt_f is the plain sum.
  out.grad_tf = out.grad_speeds.sum();
  if (!lam.allFinite()) throw DivergenceError("adjoint: non-finite costate", 0.0);
  return out;
}

namespace {

Eigen::VectorXd uniform_speeds(const OcpProblem& p, double t_f) {
  if (p.time_mode == FinalTimeMode::FreeProfile) {
    if (p.n_steps % p.profile_segments != 0)
      throw std::invalid_argument("profile_segments must divide n_steps");
    return Eigen::VectorXd::Constant(p.profile_segments, t_f);
  }
  return Eigen::VectorXd::Constant(1, t_f);
}

}  // namespace

OcpSolution solve_ocp(const OcpProblem& p) {
  p.initial.require_valid();
  p.friction.require_valid(p.initial.drivers(), p.initial.evaders());
  p.bounds.require_valid();
  const int m = p.initial.drivers();
  const int n = p.n_steps;

  Eigen::MatrixXd kc = p.kc0.size() > 0 ? p.kc0 : Eigen::MatrixXd::Zero(m, n + 1);
  Eigen::MatrixXd kp = p.kp0.size() > 0 ? p.kp0 : Eigen::MatrixXd::Ones(m, n + 1);
  if (kc.rows() != m || kc.cols() != n + 1 || kp.rows() != m || kp.cols() != n + 1)
    throw std::invalid_argument("initial guess does not match drivers x (n_steps+1)");
  Eigen::VectorXd speeds = uniform_speeds(p, p.t_f);

  const double tf_lo = p.tf_factor_lo * p.t_f;
  const double tf_hi = p.tf_factor_hi * p.t_f;
  auto project = [&](Eigen::MatrixXd& kc_v, Eigen::MatrixXd& kp_v, Eigen::VectorXd& sp) {
    kc_v = kc_v.array().max(p.bounds.kc_min).min(p.bounds.kc_max);
    kp_v = kp_v.array().max(p.bounds.kp_min).min(p.bounds.kp_max);
    if (p.time_mode != FinalTimeMode::Fixed) sp = sp.array().max(tf_lo).min(tf_hi);
  };
  project(kc, kp, speeds);

  OcpSolution sol;
  double cost = ocp_forward(p, kc, kp, speeds).cost;
  sol.cost_history.push_back(cost);
  double alpha = p.initial_step;
  bool stop = false;

  // Previous iterate and gradient for the Barzilai-Borwein trial step.
  Eigen::MatrixXd kc_prev, gkc_prev;
  Eigen::MatrixXd kp_prev, gkp_prev;
  Eigen::VectorXd sp_prev, gsp_prev;
  bool have_prev = false;

  for (int it = 0; it < p.max_iterations && !stop; ++it) {
    const AdjointResult adj = adjoint_solve(p, kc, kp, speeds);
    Eigen::VectorXd grad_sp = Eigen::VectorXd::Zero(speeds.size());
    if (p.time_mode == FinalTimeMode::FreeScalar)
      grad_sp.setConstant(adj.grad_tf);
    else if (p.time_mode == FinalTimeMode::FreeProfile)
      grad_sp = adj.grad_speeds;

    if (have_prev) {
      // BB1 spectral step, safeguarded by the Armijo backtracking below.
      double sy = ((kc - kc_prev).array() * (adj.grad_kc - gkc_prev).array()).sum();
      double ss = (kc - kc_prev).squaredNorm();
      if (p.optimize_kp) {
        sy += ((kp - kp_prev).array() * (adj.grad_kp - gkp_prev).array()).sum();
        ss += (kp - kp_prev).squaredNorm();
      }
      if (p.time_mode != FinalTimeMode::Fixed) {
        sy += ((speeds - sp_prev).array() * (grad_sp - gsp_prev).array()).sum();
        ss += (speeds - sp_prev).squaredNorm();
      }
      if (sy > 1e-300) alpha = std::min(std::max(ss / sy, 1e-8), 1e8);
    }
    kc_prev = kc;
    gkc_prev = adj.grad_kc;
    kp_prev = kp;
    gkp_prev = adj.grad_kp;
    sp_prev = speeds;
    gsp_prev = grad_sp;
    have_prev = true;

    // Projected-gradient stationarity measure at unit step.
    {
      Eigen::MatrixXd kc_u = kc - adj.grad_kc;
      Eigen::MatrixXd kp_u = p.optimize_kp ? Eigen::MatrixXd(kp - adj.grad_kp) : kp;
      Eigen::VectorXd sp_u = speeds;
      if (p.time_mode == FinalTimeMode::FreeScalar)
        sp_u.array() -= adj.grad_tf;
      else if (p.time_mode == FinalTimeMode::FreeProfile)
        sp_u -= adj.grad_speeds;
      project(kc_u, kp_u, sp_u);
      double stat = (kc_u - kc).lpNorm<Eigen::Infinity>();
      if (p.optimize_kp) stat = std::max(stat, (kp_u - kp).lpNorm<Eigen::Infinity>());
      if (p.time_mode != FinalTimeMode::Fixed)
        stat = std::max(stat, (sp_u - speeds).lpNorm<Eigen::Infinity>());
      if (stat < p.grad_tol) {
        sol.converged = true;
        break;
      }
    }

    bool accepted = false;
    for (int halving = 0; halving < 20; ++halving) {
      Eigen::MatrixXd kc_t = kc - alpha * adj.grad_kc;
      Eigen::MatrixXd kp_t = p.optimize_kp ? Eigen::MatrixXd(kp - alpha * adj.grad_kp) : kp;
      Eigen::VectorXd sp_t = speeds;
      if (p.time_mode == FinalTimeMode::FreeScalar)
        sp_t.array() -= alpha * adj.grad_tf;
      else if (p.time_mode == FinalTimeMode::FreeProfile)
        sp_t -= alpha * adj.grad_speeds;
      project(kc_t, kp_t, sp_t);

      double step_sq = (kc_t - kc).squaredNorm() + (kp_t - kp).squaredNorm() +
                       (sp_t - speeds).squaredNorm();
      if (step_sq == 0.0) break;
      double trial;
      try {
        trial = ocp_forward(p, kc_t, kp_t, sp_t).cost;
      } catch (const std::exception&) {
        alpha *= 0.5;
        continue;
      }
      if (trial <= cost - p.armijo_c * step_sq / std::max(alpha, 1e-300)) {
        const double drop = cost - trial;
        kc = kc_t;
        kp = kp_t;
        speeds = sp_t;
        cost = trial;
        sol.cost_history.push_back(cost);
        ++sol.iterations;
        accepted = true;
        alpha *= 2.0;
        if (drop < p.cost_tol * std::max(1.0, std::abs(cost))) {
          sol.converged = true;
          stop = true;
        }
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted && !stop) {
      sol.stagnated = sol.cost_history.size() > 0 && !sol.converged;
      break;
    }
  }

  // Package the solution in physical time.
  const double t_f = speeds.size() == 1 ? speeds[0] : speeds.mean();
  sol.t_f = t_f;
  sol.scaling.t_f = t_f;
  sol.scaling.speeds = speeds.size() == 1 ? Eigen::VectorXd::Constant(1, t_f) : speeds;
  SampledSchedule sched;
  sched.t_end = t_f;
  sched.kp.resize(m);
  sched.kc.resize(m);
  for (int j = 0; j < m; ++j) {
    sched.kp[j] = kp.row(j);
    sched.kc[j] = kc.row(j);
  }
  if (p.time_mode == FinalTimeMode::FreeProfile) {
    SampledSchedule in_s = sched;
    in_s.t_end = 1.0;
    sol.schedule = rescale_time(in_s, sol.scaling);
  } else {
    sol.schedule = sched;
  }
  const auto fwd = ocp_forward(p, kc, kp, speeds);
  sol.breakdown = fwd.breakdown;
  // Trajectory on the uniform t-grid (exact for fixed/scalar time modes).
  sol.trajectory =
      integrate(p.initial, ControlSchedule{sol.schedule}, p.kernels, p.friction, t_f, n, p.bounds,
                p.dynamics);
  return sol;
}

InitialGuess build_initial_guess(const SystemState& initial, const KernelSet& kernels,
                                 const FrictionParams& friction, const ControlBounds& bounds,
                                 const Vec2& target, GuessKind kind, int n_steps,
                                 const std::optional<SampledSchedule>& hand, double hand_t_f) {
  const int m = initial.drivers();
  InitialGuess g;
  g.kp = Eigen::MatrixXd::Ones(m, n_steps + 1);
  g.kc = Eigen::MatrixXd::Zero(m, n_steps + 1);
  switch (kind) {
    case GuessKind::Constant: {
      ConstantReachSpec spec;
      spec.target = target;
      const ConstantReachResult r = constant_control_reach(initial, kernels, friction, bounds, spec);
      g.kc.setConstant(r.kappa_c);
      g.t_f = r.t_f;
      break;
    }
    case GuessKind::OffBangOff: {
      ReachSpec spec;
      spec.target = target;
      const ReachResult r = reach_point(initial, kernels, friction, bounds, spec);
      for (int k = 0; k <= n_steps; ++k) {
        const double t = r.t_f * k / n_steps;
        const auto c = sample(ControlSchedule{r.schedule}, t, bounds);
        for (int j = 0; j < m; ++j) {
          g.kc(j, k) = c[j].kc;
          g.kp(j, k) = c[j].kp;
        }
      }
      g.t_f = r.t_f;
      break;
    }
    case GuessKind::Hand: {
      if (!hand) throw std::invalid_argument("hand guess requires a schedule");
      if (hand->nodes() != n_steps + 1 || hand->drivers() != m)
        throw std::invalid_argument("hand guess grid does not match the problem");
      for (int j = 0; j < m; ++j) {
        g.kc.row(j) = hand->kc[j];
        g.kp.row(j) = hand->kp[j];
      }
      g.t_f = hand_t_f > 0.0 ? hand_t_f : hand->t_end;
      break;
    }
  }
  return g;
}

GradientCheck validate_gradient(const OcpProblem& p, double fd_step, int node_stride) {
  const int m = p.initial.drivers();
  const int n = p.n_steps;
  Eigen::MatrixXd kc = p.kc0.size() > 0 ? p.kc0 : Eigen::MatrixXd::Zero(m, n + 1);
  Eigen::MatrixXd kp = p.kp0.size() > 0 ? p.kp0 : Eigen::MatrixXd::Ones(m, n + 1);
  Eigen::VectorXd speeds = uniform_speeds(p, p.t_f);
  const AdjointResult adj = adjoint_solve(p, kc, kp, speeds);

  GradientCheck check;
  double fd_scale = 0.0;
  Eigen::MatrixXd fd_kc = Eigen::MatrixXd::Zero(m, n + 1);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k <= n; k += node_stride) {
      Eigen::MatrixXd kc_p = kc, kc_m = kc;
      kc_p(j, k) += fd_step;
      kc_m(j, k) -= fd_step;
      fd_kc(j, k) = (ocp_forward(p, kc_p, kp, speeds).cost - ocp_forward(p, kc_m, kp, speeds).cost) /
                    (2.0 * fd_step);
      fd_scale = std::max(fd_scale, std::abs(fd_kc(j, k)));
    }
  }
  fd_scale = std::max(fd_scale, 1e-12);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k <= n; k += node_stride)
      check.max_rel_error_kc =
          std::max(check.max_rel_error_kc, std::abs(fd_kc(j, k) - adj.grad_kc(j, k)) / fd_scale);

  if (p.time_mode != FinalTimeMode::Fixed) {
    Eigen::VectorXd sp_p = speeds.array() + fd_step;
    Eigen::VectorXd sp_m = speeds.array() - fd_step;
    const double fd_tf =
        (ocp_forward(p, kc, kp, sp_p).cost - ocp_forward(p, kc, kp, sp_m).cost) / (2.0 * fd_step);
    check.rel_error_tf = std::abs(fd_tf - adj.grad_tf) / std::max(std::abs(fd_tf), 1e-12);
  }

  if (p.optimize_kp) {
    double fd_scale_kp = 0.0;
    Eigen::MatrixXd fd_kp = Eigen::MatrixXd::Zero(m, n + 1);
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k <= n; k += node_stride) {
        Eigen::MatrixXd kp_p = kp, kp_m = kp;
        kp_p(j, k) += fd_step;
        kp_m(j, k) -= fd_step;
        fd_kp(j, k) =
            (ocp_forward(p, kc, kp_p, speeds).cost - ocp_forward(p, kc, kp_m, speeds).cost) /
            (2.0 * fd_step);
        fd_scale_kp = std::max(fd_scale_kp, std::abs(fd_kp(j, k)));
      }
    }
    fd_scale_kp = std::max(fd_scale_kp, 1e-12);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k <= n; k += node_stride)
        check.max_rel_error_kp = std::max(check.max_rel_error_kp,
                                          std::abs(fd_kp(j, k) - adj.grad_kp(j, k)) / fd_scale_kp);
  }
  return check;
}

}  // namespace gbr
