#pragma once

#include <optional>

#include "gbr/controls.hpp"
#include "gbr/dynamics.hpp"
#include "gbr/state.hpp"
#include "gbr/trajectory.hpp"

namespace gbr {

/// Per-run memory of the pursuit stopping law: true while pursuit is
/// suspended. Transitions only at threshold crossings.
struct HysteresisState {
  bool stopped = false;
};

/// Angle-steering circumvention law for driver j:
///   kappa^c_j = -kappa_bar_c * ((u_f - u_ec) . (u_dj - u_ec)^perp)
///                            / (|u_f - u_ec| |u_dj - u_ec|).
/// Bounded by kappa_bar_c (Cauchy-Schwarz). Degenerate denominators below
/// 1e-9 return 0.
double feedback_circumvention(const SystemState& state, const FeedbackParams& params, int driver);

/// Hysteresis pursuit stopping: kappa^p = 0 for every driver while stopped;
/// `stopped` is set when the gathering radius exceeds gather_on and cleared
/// when it drops below gather_off.
double feedback_pursuit(const SystemState& state, const FeedbackParams& params,
                        HysteresisState& hysteresis);

enum class StopRule { FixedHorizon, BarycenterNearTarget };

struct ClosedLoopSettings {
  StopRule stop_rule = StopRule::BarycenterNearTarget;
  double stop_radius = 0.05;  // barycenter-to-target distance that ends the run
  ControlBounds bounds;
  DynamicsOptions dynamics;
};

struct ClosedLoopReport {
  double control_time = 0.0;       // horizon actually simulated
  bool target_reached = false;     // stop rule fired before the horizon
  double running_cost = 0.0;       // integral of mean_j |kappa^c_j|^2 dt
  double min_driver_evader_distance = 0.0;
  double final_barycenter_error = 0.0;
  std::optional<double> first_stop_time;  // first time the pursuit law stopped
  int hysteresis_switches = 0;
  std::vector<double> gathering_radius_history;  // per grid node
};

/// Closed-loop simulation: kappa^c_j recomputed from the stage state at
/// every RK4 stage, kappa^p from the hysteresis law updated once per step
/// using the step's start state.
std::pair<Trajectory, ClosedLoopReport> run_closed_loop(
    const SystemState& initial, const FeedbackParams& params, const KernelSet& kernels,
    const FrictionParams& friction, double t_f, int n_steps, const ClosedLoopSettings& settings = {});

}  // namespace gbr
