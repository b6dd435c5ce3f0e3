#include "gbr/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "gbr/errors.hpp"

namespace gbr {

void SystemState::require_valid() const {
  if (drivers() < 1) throw std::invalid_argument("state: at least one driver required");
  if (evaders() < 1) throw std::invalid_argument("state: at least one evader required");
  if (driver_vel.size() != driver_pos.size() || evader_vel.size() != evader_pos.size())
    throw std::invalid_argument("state: position/velocity size mismatch");
  auto finite = [](const std::vector<Vec2>& vs) {
    for (const Vec2& v : vs)
      if (!v.allFinite()) return false;
    return true;
  };
  if (!finite(driver_pos) || !finite(driver_vel) || !finite(evader_pos) || !finite(evader_vel))
    throw std::invalid_argument("state: non-finite coordinate");
}

Vec2 barycenter(const SystemState& state) {
  Vec2 c = Vec2::Zero();
  for (const Vec2& u : state.evader_pos) c += u;
  return c / static_cast<double>(state.evaders());
}

double gathering_radius(const SystemState& state) {
  const Vec2 c = barycenter(state);
  double r = 0.0;
  for (const Vec2& u : state.evader_pos) r = std::max(r, (u - c).norm());
  return r;
}

FrictionParams FrictionParams::uniform(int drivers, int evaders, double nu) {
  FrictionParams f;
  f.nu_d = Eigen::VectorXd::Constant(drivers, nu);
  f.nu_e = Eigen::VectorXd::Constant(evaders, nu);
  return f;
}

bool FrictionParams::equal_friction() const {
  if (nu_d.size() == 0 && nu_e.size() == 0) return true;
  const double ref = nu_d.size() > 0 ? nu_d[0] : nu_e[0];
  return (nu_d.array() == ref).all() && (nu_e.array() == ref).all();
}

void FrictionParams::require_valid(int drivers, int evaders) const {
  if (nu_d.size() != drivers || nu_e.size() != evaders)
    throw std::invalid_argument("friction: per-agent coefficient count mismatch");
  if ((nu_d.array() <= 0.0).any() || (nu_e.array() <= 0.0).any())
    throw std::invalid_argument("friction must be positive");
}

Derivative rhs_general(const SystemState& state, const std::vector<DriverControl>& controls,
                       const KernelSet& kernels, const FrictionParams& friction,
                       const DynamicsOptions& options) {
  const int m = state.drivers();
  const int n = state.evaders();
  if (static_cast<int>(controls.size()) != m)
    throw std::invalid_argument("rhs: one control pair per driver required");

  Derivative d;
  d.driver_vel = state.driver_vel;
  d.evader_vel = state.evader_vel;
  d.driver_acc.assign(m, Vec2::Zero());
  d.evader_acc.assign(n, Vec2::Zero());

  const Vec2 uec = barycenter(state);
  for (int j = 0; j < m; ++j) {
    const Vec2 dj = state.driver_pos[j] - uec;
    const double r = dj.norm();
    if (r < options.min_separation)
      throw SingularityError("driver coincides with the evader barycenter", j, -1, state.t);
    Vec2 acc = -controls[j].kp * kernels.f_d(r) * dj + controls[j].kc * perp(dj) -
               friction.nu_d[j] * state.driver_vel[j];
    for (int l = 0; l < m; ++l) {
      if (l == j) continue;
      const Vec2 dd = state.driver_pos[j] - state.driver_pos[l];
      acc += (1.0 / m) * kernels.psi_d(dd.norm()) * dd;
    }
    d.driver_acc[j] = acc;
  }
  for (int i = 0; i < n; ++i) {
    Vec2 acc = -friction.nu_e[i] * state.evader_vel[i];
    for (int j = 0; j < m; ++j) {
      const Vec2 e = state.driver_pos[j] - state.evader_pos[i];
      const double r = e.norm();
      if (r < options.min_separation)
        throw SingularityError("driver-evader collision", j, i, state.t);
      acc += -(1.0 / m) * kernels.f_e(r) * e;
    }
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      const Vec2 w = state.evader_pos[k] - state.evader_pos[i];
      acc += options.psi_e_sign * (1.0 / n) * kernels.psi_e(w.norm()) * w;
    }
    d.evader_acc[i] = acc;
  }
  return d;
}

std::pair<Vec2, Vec2> rhs_relative(const Vec2& u, const Vec2& v, double kp, double kc,
                                   const KernelSet& kernels, double nu) {
  const double r = u.norm();
  if (r < 1e-6) throw SingularityError("relative position at the origin", 0, 0, 0.0);
  const Vec2 acc = -(kp * kernels.f_d(r) - kernels.f_e(r)) * u - nu * v + kc * perp(u);
  return {v, acc};
}

namespace {

SystemState axpy(const SystemState& x, double a, const Derivative& d) {
  SystemState y = x;
  const int m = x.drivers();
  const int n = x.evaders();
  for (int j = 0; j < m; ++j) {
    y.driver_pos[j] += a * d.driver_vel[j];
    y.driver_vel[j] += a * d.driver_acc[j];
  }
  for (int i = 0; i < n; ++i) {
    y.evader_pos[i] += a * d.evader_vel[i];
    y.evader_vel[i] += a * d.evader_acc[i];
  }
  return y;
}

bool state_finite(const SystemState& s) {
  for (const Vec2& v : s.driver_pos)
    if (!v.allFinite()) return false;
  for (const Vec2& v : s.driver_vel)
    if (!v.allFinite()) return false;
  for (const Vec2& v : s.evader_pos)
    if (!v.allFinite()) return false;
  for (const Vec2& v : s.evader_vel)
    if (!v.allFinite()) return false;
  return true;
}

}  // namespace

SystemState rk4_step(const SystemState& state, double t, double h, const ControlProvider& controls,
                     const KernelSet& kernels, const FrictionParams& friction,
                     const DynamicsOptions& options) {
  auto eval = [&](const SystemState& s, double ts) {
    return rhs_general(s, controls(ts, s), kernels, friction, options);
  };
  const Derivative k1 = eval(state, t);
  const SystemState xa = axpy(state, 0.5 * h, k1);
  const Derivative k2 = eval(xa, t + 0.5 * h);
  const SystemState xb = axpy(state, 0.5 * h, k2);
  const Derivative k3 = eval(xb, t + 0.5 * h);
  const SystemState xc = axpy(state, h, k3);
  const Derivative k4 = eval(xc, t + h);

  SystemState next = state;
  next.t = t + h;
  const int m = state.drivers();
  const int n = state.evaders();
  for (int j = 0; j < m; ++j) {
    next.driver_pos[j] += (h / 6.0) * (k1.driver_vel[j] + 2.0 * k2.driver_vel[j] +
                                       2.0 * k3.driver_vel[j] + k4.driver_vel[j]);
    next.driver_vel[j] += (h / 6.0) * (k1.driver_acc[j] + 2.0 * k2.driver_acc[j] +
                                       2.0 * k3.driver_acc[j] + k4.driver_acc[j]);
  }
  for (int i = 0; i < n; ++i) {
    next.evader_pos[i] += (h / 6.0) * (k1.evader_vel[i] + 2.0 * k2.evader_vel[i] +
                                       2.0 * k3.evader_vel[i] + k4.evader_vel[i]);
    next.evader_vel[i] += (h / 6.0) * (k1.evader_acc[i] + 2.0 * k2.evader_acc[i] +
                                       2.0 * k3.evader_acc[i] + k4.evader_acc[i]);
  }
  return next;
}

Trajectory integrate(const SystemState& initial, const ControlSchedule& schedule,
                     const KernelSet& kernels, const FrictionParams& friction, double t_f,
                     int n_steps, const ControlBounds& bounds, const DynamicsOptions& options) {
  initial.require_valid();
  friction.require_valid(initial.drivers(), initial.evaders());
  if (n_steps < 1) throw std::invalid_argument("integrate: n_steps must be at least 1");
  if (t_f <= 0.0) throw std::invalid_argument("integrate: t_f must be positive");
  if (std::holds_alternative<FeedbackSchedule>(schedule))
    throw std::invalid_argument("integrate: feedback schedules need run_closed_loop");

  const ControlProvider provider = [&](double t, const SystemState&) {
    return sample(schedule, t, bounds);
  };

  Trajectory traj;
  traj.t_f = t_f;
  traj.states.reserve(n_steps + 1);
  traj.controls.reserve(n_steps + 1);
  SystemState x = initial;
  x.t = 0.0;
  traj.states.push_back(x);
  traj.controls.push_back(sample(schedule, 0.0, bounds));
  const double h = t_f / n_steps;
  for (int k = 0; k < n_steps; ++k) {
    x = rk4_step(x, k * h, h, provider, kernels, friction, options);
    if (!state_finite(x)) throw DivergenceError("integrate: non-finite state", k * h);
    traj.states.push_back(x);
    traj.controls.push_back(sample(schedule, (k + 1) * h, bounds));
  }
  return traj;
}

RelativeTrajectory integrate_relative(const Vec2& u0, const Vec2& v0,
                                      const ControlSchedule& schedule, const KernelSet& kernels,
                                      double nu, double t_f, int n_steps,
                                      const ControlBounds& bounds) {
  RelativeTrajectory traj;
  traj.t_f = t_f;
  traj.u.reserve(n_steps + 1);
  traj.v.reserve(n_steps + 1);
  traj.u.push_back(u0);
  traj.v.push_back(v0);
  const double h = t_f / n_steps;
  Vec2 u = u0, v = v0;
  auto eval = [&](const Vec2& uu, const Vec2& vv, double t) {
    const auto c = sample(schedule, t, bounds);
    return rhs_relative(uu, vv, c[0].kp, c[0].kc, kernels, nu);
  };
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * h;
    const auto k1 = eval(u, v, t);
    const auto k2 = eval(u + 0.5 * h * k1.first, v + 0.5 * h * k1.second, t + 0.5 * h);
    const auto k3 = eval(u + 0.5 * h * k2.first, v + 0.5 * h * k2.second, t + 0.5 * h);
    const auto k4 = eval(u + h * k3.first, v + h * k3.second, t + h);
    u += (h / 6.0) * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
    v += (h / 6.0) * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
    if (!u.allFinite() || !v.allFinite())
      throw DivergenceError("integrate_relative: non-finite state", t);
    traj.u.push_back(u);
    traj.v.push_back(v);
  }
  return traj;
}

// --- flat layout ---------------------------------------------------------

Eigen::VectorXd pack_state(const SystemState& state) {
  const int m = state.drivers();
  const int n = state.evaders();
  Eigen::VectorXd x(4 * (m + n));
  for (int j = 0; j < m; ++j) x.segment<2>(2 * j) = state.driver_pos[j];
  for (int i = 0; i < n; ++i) x.segment<2>(2 * (m + i)) = state.evader_pos[i];
  const int voff = 2 * (m + n);
  for (int j = 0; j < m; ++j) x.segment<2>(voff + 2 * j) = state.driver_vel[j];
  for (int i = 0; i < n; ++i) x.segment<2>(voff + 2 * (m + i)) = state.evader_vel[i];
  return x;
}

SystemState unpack_state(const Eigen::VectorXd& x, int drivers, int evaders, double t) {
  SystemState s;
  s.t = t;
  s.driver_pos.resize(drivers);
  s.driver_vel.resize(drivers);
  s.evader_pos.resize(evaders);
  s.evader_vel.resize(evaders);
  const int voff = 2 * (drivers + evaders);
  for (int j = 0; j < drivers; ++j) {
    s.driver_pos[j] = x.segment<2>(2 * j);
    s.driver_vel[j] = x.segment<2>(voff + 2 * j);
  }
  for (int i = 0; i < evaders; ++i) {
    s.evader_pos[i] = x.segment<2>(2 * (drivers + i));
    s.evader_vel[i] = x.segment<2>(voff + 2 * (drivers + i));
  }
  return s;
}

Eigen::VectorXd rhs_flat(const Eigen::VectorXd& x, const std::vector<DriverControl>& controls,
                         int drivers, int evaders, const KernelSet& kernels,
                         const FrictionParams& friction, const DynamicsOptions& options) {
  const SystemState s = unpack_state(x, drivers, evaders);
  const Derivative d = rhs_general(s, controls, kernels, friction, options);
  Eigen::VectorXd out(x.size());
  const int voff = 2 * (drivers + evaders);
  for (int j = 0; j < drivers; ++j) {
    out.segment<2>(2 * j) = d.driver_vel[j];
    out.segment<2>(voff + 2 * j) = d.driver_acc[j];
  }
  for (int i = 0; i < evaders; ++i) {
    out.segment<2>(2 * (drivers + i)) = d.evader_vel[i];
    out.segment<2>(voff + 2 * (drivers + i)) = d.evader_acc[i];
  }
  return out;
}

namespace {

// d/dd [phi(|d|) d] = phi(|d|) I + (phi'(|d|)/|d|) d d^T
Eigen::Matrix2d kernel_block(const RadialKernel& phi, const Vec2& d) {
  const double r = d.norm();
  return phi(r) * Eigen::Matrix2d::Identity() + (phi.derivative(r) / r) * (d * d.transpose());
}

}  // namespace

Eigen::MatrixXd rhs_jacobian(const Eigen::VectorXd& x, const std::vector<DriverControl>& controls,
                             int drivers, int evaders, const KernelSet& kernels,
                             const FrictionParams& friction, const DynamicsOptions& options) {
  const int m = drivers, n = evaders;
  const int dim = 4 * (m + n);
  const int voff = 2 * (m + n);
  const SystemState s = unpack_state(x, m, n);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  J.topRightCorner(voff, voff).setIdentity();  // d(position')/d(velocity)

  const Eigen::Matrix2d R = perp_matrix();
  const Vec2 uec = barycenter(s);
  auto pos_d = [&](int j) { return 2 * j; };
  auto pos_e = [&](int i) { return 2 * (m + i); };
  auto vel_d = [&](int j) { return voff + 2 * j; };
  auto vel_e = [&](int i) { return voff + 2 * (m + i); };

  for (int j = 0; j < m; ++j) {
    const Vec2 dj = s.driver_pos[j] - uec;
    const Eigen::Matrix2d Gd = kernel_block(kernels.f_d, dj);
    const Eigen::Matrix2d A = -controls[j].kp * Gd + controls[j].kc * R;
    J.block<2, 2>(vel_d(j), pos_d(j)) += A;
    for (int k = 0; k < n; ++k) J.block<2, 2>(vel_d(j), pos_e(k)) += -A / n;
    for (int l = 0; l < m; ++l) {
      if (l == j) continue;
      const Eigen::Matrix2d Gp = kernel_block(kernels.psi_d, s.driver_pos[j] - s.driver_pos[l]);
      J.block<2, 2>(vel_d(j), pos_d(j)) += Gp / m;
      J.block<2, 2>(vel_d(j), pos_d(l)) -= Gp / m;
    }
    J.block<2, 2>(vel_d(j), vel_d(j)) -= friction.nu_d[j] * Eigen::Matrix2d::Identity();
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const Eigen::Matrix2d Ge = kernel_block(kernels.f_e, s.driver_pos[j] - s.evader_pos[i]);
      J.block<2, 2>(vel_e(i), pos_d(j)) -= Ge / m;
      J.block<2, 2>(vel_e(i), pos_e(i)) += Ge / m;
    }
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      const Eigen::Matrix2d Gw = kernel_block(kernels.psi_e, s.evader_pos[k] - s.evader_pos[i]);
      J.block<2, 2>(vel_e(i), pos_e(k)) += options.psi_e_sign * Gw / n;
      J.block<2, 2>(vel_e(i), pos_e(i)) -= options.psi_e_sign * Gw / n;
    }
    J.block<2, 2>(vel_e(i), vel_e(i)) -= friction.nu_e[i] * Eigen::Matrix2d::Identity();
  }
  return J;
}

Eigen::VectorXd rhs_dkc(const Eigen::VectorXd& x, int driver, int drivers, int evaders) {
  const SystemState s = unpack_state(x, drivers, evaders);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  const Vec2 dj = s.driver_pos[driver] - barycenter(s);
  out.segment<2>(2 * (drivers + evaders) + 2 * driver) = perp(dj);
  return out;
}

Eigen::VectorXd rhs_dkp(const Eigen::VectorXd& x, int driver, int drivers, int evaders,
                        const KernelSet& kernels) {
  const SystemState s = unpack_state(x, drivers, evaders);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  const Vec2 dj = s.driver_pos[driver] - barycenter(s);
  out.segment<2>(2 * (drivers + evaders) + 2 * driver) = -kernels.f_d(dj.norm()) * dj;
  return out;
}

}  // namespace gbr
