#include "gbr/feedback.hpp"

#include <cmath>
#include <limits>

namespace gbr {

double feedback_circumvention(const SystemState& state, const FeedbackParams& params, int driver) {
  const Vec2 uec = barycenter(state);
  const Vec2 a = params.target - uec;
  const Vec2 b = state.driver_pos[driver] - uec;
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-9 || nb < 1e-9) return 0.0;
  return -params.kappa_bar_c * a.dot(perp(b)) / (na * nb);
}

double feedback_pursuit(const SystemState& state, const FeedbackParams& params,
                        HysteresisState& hysteresis) {
  const double radius = gathering_radius(state);
  if (!hysteresis.stopped && radius > params.gather_on) hysteresis.stopped = true;
  else if (hysteresis.stopped && radius < params.gather_off) hysteresis.stopped = false;
  return hysteresis.stopped ? 0.0 : 1.0;
}

std::pair<Trajectory, ClosedLoopReport> run_closed_loop(const SystemState& initial,
                                                        const FeedbackParams& params,
                                                        const KernelSet& kernels,
                                                        const FrictionParams& friction, double t_f,
                                                        int n_steps,
                                                        const ClosedLoopSettings& settings) {
  initial.require_valid();
  friction.require_valid(initial.drivers(), initial.evaders());
  params.require_valid();
  const int m = initial.drivers();
  const double h = t_f / n_steps;

  HysteresisState hysteresis;
  ClosedLoopReport report;
  report.min_driver_evader_distance = std::numeric_limits<double>::infinity();

  Trajectory traj;
  traj.states.reserve(n_steps + 1);
  traj.controls.reserve(n_steps + 1);

  auto controls_at = [&](const SystemState& s, double kp) {
    std::vector<DriverControl> c(m);
    for (int j = 0; j < m; ++j) {
      c[j].kp = settings.bounds.clamp_kp(kp);
      c[j].kc = settings.bounds.clamp_kc(feedback_circumvention(s, params, j));
    }
    return c;
  };
  auto scan_state = [&](const SystemState& s) {
    report.gathering_radius_history.push_back(gathering_radius(s));
    for (const Vec2& ud : s.driver_pos)
      for (const Vec2& ue : s.evader_pos)
        report.min_driver_evader_distance =
            std::min(report.min_driver_evader_distance, (ud - ue).norm());
  };
  auto mean_kc_sq = [&](const std::vector<DriverControl>& c) {
    double s = 0.0;
    for (const DriverControl& v : c) s += v.kc * v.kc;
    return s / m;
  };

  SystemState x = initial;
  x.t = 0.0;
  scan_state(x);
  bool was_stopped = hysteresis.stopped;
  double kp = feedback_pursuit(x, params, hysteresis);
  traj.states.push_back(x);
  traj.controls.push_back(controls_at(x, kp));

  int steps_done = 0;
  for (int k = 0; k < n_steps; ++k) {
    // The pursuit bit holds for the whole step; kappa^c follows each stage.
    const ControlProvider provider = [&](double, const SystemState& stage) {
      return controls_at(stage, kp);
    };
    x = rk4_step(x, k * h, h, provider, kernels, friction, settings.dynamics);
    ++steps_done;
    scan_state(x);

    was_stopped = hysteresis.stopped;
    kp = feedback_pursuit(x, params, hysteresis);
    if (hysteresis.stopped != was_stopped) {
      ++report.hysteresis_switches;
      if (hysteresis.stopped && !report.first_stop_time) report.first_stop_time = x.t;
    }
    const auto node_controls = controls_at(x, kp);
    report.running_cost +=
        0.5 * h * (mean_kc_sq(traj.controls.back()) + mean_kc_sq(node_controls));
    traj.states.push_back(x);
    traj.controls.push_back(node_controls);

    if (settings.stop_rule == StopRule::BarycenterNearTarget &&
        (barycenter(x) - params.target).norm() < settings.stop_radius) {
      report.target_reached = true;
      break;
    }
  }
  traj.t_f = steps_done * h;
  report.control_time = traj.t_f;
  report.final_barycenter_error = (barycenter(x) - params.target).norm();
  return {std::move(traj), report};
}

}  // namespace gbr
