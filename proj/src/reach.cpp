#include "gbr/reach.hpp"

#include <algorithm>
#include <cmath>

#include "gbr/diagnostics.hpp"
#include "gbr/nelder_mead.hpp"

namespace gbr {

namespace {

OffBangOffSchedule make_obo(int drivers, double t1, double t2, double kappa_c) {
  OffBangOffSchedule s;
  s.t1 = t1;
  s.t2 = t2;
  s.values.assign(drivers, DriverControl{1.0, kappa_c});
  return s;
}

double final_error(const Trajectory& traj, const Vec2& target) {
  return (traj.back().evader_pos[0] - target).norm();
}

struct Candidate {
  double t2 = 0.0, t_f = 0.0;
  double error = std::numeric_limits<double>::infinity();
};

// Is the target inside the stable circumvention orbit the evader settles on
// when the control never switches off? That disk is unreachable for this t1
// (the post-release motion leaves the orbit outward).
bool target_in_exclusion_ball(const SystemState& initial, const KernelSet& kernels,
                              const FrictionParams& friction, const ControlBounds& bounds,
                              const ReachSpec& spec) {
  const double w = std::abs(spec.kappa_c) / friction.common_nu();
  const double period = 2.0 * M_PI / std::max(w, 1e-3);
  const double horizon = spec.t1 + 6.0 * period;
  const auto schedule = make_obo(initial.drivers(), spec.t1, horizon + 1.0, spec.kappa_c);
  const int steps = std::max(2000, static_cast<int>(horizon * 100));
  try {
    const Trajectory probe =
        integrate(initial, schedule, kernels, friction, horizon, steps, bounds);
    const auto [orbit, residual] = fit_circumvention(probe, kernels, friction, 0.3);
    (void)residual;
    return (spec.target - orbit.center).norm() <= orbit.r_e * 1.05;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ReachResult reach_point(const SystemState& initial, const KernelSet& kernels,
                        const FrictionParams& friction, const ControlBounds& bounds,
                        const ReachSpec& spec) {
  initial.require_valid();
  if (initial.evaders() != 1)
    throw std::invalid_argument("reach_point targets the single-evader problem");
  if (!friction.equal_friction())
    throw std::invalid_argument("reach_point requires equal friction");
  if (spec.tolerance <= 0.0) throw std::invalid_argument("reach tolerance must be positive");

  Candidate best;
  double best_t1 = spec.t1;

  auto error_at = [&](double t1, double t2, double t_f) {
    const auto schedule = make_obo(initial.drivers(), t1, t2, spec.kappa_c);
    const Trajectory traj =
        integrate(initial, schedule, kernels, friction, t_f, spec.n_steps, bounds);
    return final_error(traj, spec.target);
  };

  for (int retry = 0; retry <= spec.t1_retries; ++retry) {
    const double t1 = spec.t1 + 2.0 * retry;
    Candidate local;
    for (int a = 0; a < spec.grid; ++a) {
      const double t2 = t1 + spec.box.t2_span * a / (spec.grid - 1);
      for (int b = 0; b < spec.grid; ++b) {
        const double dt =
            spec.box.dt_min + (spec.box.dt_max - spec.box.dt_min) * b / (spec.grid - 1);
        const double err = error_at(t1, t2, t2 + dt);
        if (err < local.error) local = {t2, t2 + dt, err};
      }
    }
    if (retry == 0 && spec.warm_start) {
      const double err = error_at(t1, (*spec.warm_start)[0], (*spec.warm_start)[1]);
      if (err < local.error) local = {(*spec.warm_start)[0], (*spec.warm_start)[1], err};
    }

    // Simplex refinement in (t2, dt), clamped into the box.
    auto clamp_point = [&](Eigen::VectorXd z) {
      z[0] = std::clamp(z[0], t1, t1 + spec.box.t2_span);
      z[1] = std::clamp(z[1], spec.box.dt_min, spec.box.dt_max);
      return z;
    };
    NelderMeadOptions opts;
    opts.max_evals = spec.refine_evals;
    Eigen::VectorXd z0(2);
    z0 << local.t2, local.t_f - local.t2;
    Eigen::VectorXd step(2);
    step << spec.box.t2_span / (spec.grid - 1), (spec.box.dt_max - spec.box.dt_min) / (spec.grid - 1);
    const auto result = nelder_mead(
        [&](const Eigen::VectorXd& z) {
          const Eigen::VectorXd c = clamp_point(z);
          const double e = error_at(t1, c[0], c[0] + c[1]);
          return e * e;
        },
        z0, step, opts);
    const Eigen::VectorXd zr = clamp_point(result.x);
    const double refined = error_at(t1, zr[0], zr[0] + zr[1]);
    if (refined < local.error) local = {zr[0], zr[0] + zr[1], refined};

    if (local.error < best.error) {
      best = local;
      best_t1 = t1;
    }
    if (best.error <= spec.tolerance) break;
    // Retry with a later switch-on only when the target is provably shadowed
    // by the stable orbit of this t1.
    ReachSpec probe_spec = spec;
    probe_spec.t1 = t1;
    if (!target_in_exclusion_ball(initial, kernels, friction, bounds, probe_spec)) break;
  }

  ReachResult out;
  out.t1 = best_t1;
  out.t2 = best.t2;
  out.t_f = best.t_f;
  out.achieved_error = best.error;
  out.reached = best.error <= spec.tolerance;
  out.schedule = make_obo(initial.drivers(), best_t1, best.t2, spec.kappa_c);
  out.trajectory =
      integrate(initial, out.schedule, kernels, friction, best.t_f, spec.n_steps, bounds);
  return out;
}

std::vector<ReachResult> reach_waypoints(const SystemState& initial, const KernelSet& kernels,
                                         const FrictionParams& friction,
                                         const ControlBounds& bounds,
                                         const std::vector<Vec2>& targets, const ReachSpec& spec,
                                         const std::vector<double>* kappa_c_per_leg) {
  std::vector<ReachResult> legs;
  SystemState state = initial;
  for (size_t i = 0; i < targets.size(); ++i) {
    ReachSpec leg_spec = spec;
    leg_spec.target = targets[i];
    if (kappa_c_per_leg != nullptr && i < kappa_c_per_leg->size())
      leg_spec.kappa_c = (*kappa_c_per_leg)[i];
    ReachResult leg = reach_point(state, kernels, friction, bounds, leg_spec);
    const bool ok = leg.reached;
    state = leg.trajectory.back();
    state.t = 0.0;
    legs.push_back(std::move(leg));
    if (!ok) break;  // partial result; the failing leg is the last entry
  }
  return legs;
}

ConstantReachResult constant_control_reach(const SystemState& initial, const KernelSet& kernels,
                                           const FrictionParams& friction,
                                           const ControlBounds& bounds,
                                           const ConstantReachSpec& spec) {
  initial.require_valid();
  if (initial.evaders() != 1)
    throw std::invalid_argument("constant_control_reach targets the single-evader problem");

  auto error_at = [&](double kc, double t_f) {
    ConstantSchedule schedule;
    schedule.values.assign(initial.drivers(), DriverControl{1.0, kc});
    const Trajectory traj =
        integrate(initial, ControlSchedule{schedule}, kernels, friction, t_f, spec.n_steps, bounds);
    return final_error(traj, spec.target);
  };

  double best_kc = 0.0, best_tf = spec.tf_min;
  double best_err = std::numeric_limits<double>::infinity();
  for (int a = 0; a < spec.grid; ++a) {
    const double kc = bounds.kc_min + (bounds.kc_max - bounds.kc_min) * a / (spec.grid - 1);
    for (int b = 0; b < spec.grid; ++b) {
      const double tf = spec.tf_min + (spec.tf_max - spec.tf_min) * b / (spec.grid - 1);
      const double err = error_at(kc, tf);
      if (err < best_err) {
        best_err = err;
        best_kc = kc;
        best_tf = tf;
      }
    }
  }
  auto clamp_point = [&](Eigen::VectorXd z) {
    z[0] = std::clamp(z[0], bounds.kc_min, bounds.kc_max);
    z[1] = std::clamp(z[1], spec.tf_min, spec.tf_max);
    return z;
  };
  NelderMeadOptions opts;
  opts.max_evals = spec.refine_evals;
  Eigen::VectorXd z0(2);
  z0 << best_kc, best_tf;
  Eigen::VectorXd step(2);
  step << (bounds.kc_max - bounds.kc_min) / (spec.grid - 1),
      (spec.tf_max - spec.tf_min) / (spec.grid - 1);
  const auto result = nelder_mead(
      [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd c = clamp_point(z);
        const double e = error_at(c[0], c[1]);
        return e * e;
      },
      z0, step, opts);
  const Eigen::VectorXd zr = clamp_point(result.x);
  if (const double refined = error_at(zr[0], zr[1]); refined < best_err) {
    best_err = refined;
    best_kc = zr[0];
    best_tf = zr[1];
  }

  ConstantReachResult out;
  out.kappa_c = best_kc;
  out.t_f = best_tf;
  out.achieved_error = best_err;
  out.reached = best_err <= spec.tolerance;
  ConstantSchedule schedule;
  schedule.values.assign(initial.drivers(), DriverControl{1.0, best_kc});
  out.trajectory = integrate(initial, ControlSchedule{schedule}, kernels, friction, best_tf,
                             spec.n_steps, bounds);
  return out;
}

}  // namespace gbr
