#pragma once

#include <optional>
#include <vector>

#include "gbr/dynamics.hpp"

namespace gbr {

/// Search region for the off-bang-off switch times, relative to t1:
/// t2 in [t1, t1 + t2_span], t_f = t2 + dt with dt in [dt_min, dt_max].
struct ReachBox {
  double t2_span = 14.0;
  double dt_min = 0.25;
  double dt_max = 10.0;
};

/// Target specification for the off-bang-off reachability search.
struct ReachSpec {
  Vec2 target{0.0, 0.0};
  double kappa_c = 1.0;
  double t1 = 2.0;
  double tolerance = 0.05;
  ReachBox box;
  int grid = 25;           // coarse grid resolution per axis
  int refine_evals = 200;  // simplex refinement budget
  int n_steps = 1000;
  /// When the target sits inside the stable-orbit exclusion ball of the
  /// current t1, retry with t1 + 2, t1 + 4, ... up to this many extra tries.
  int t1_retries = 4;
  /// Extra candidate evaluated alongside the coarse grid; lets callers keep
  /// a previous result when enlarging the box.
  std::optional<Eigen::Vector2d> warm_start;  // (t2, t_f)
};

struct ReachResult {
  OffBangOffSchedule schedule;
  double achieved_error = 0.0;  // |u_e(t_f) - target|, reported honestly on failure
  bool reached = false;
  double t1 = 0.0, t2 = 0.0, t_f = 0.0;
  Trajectory trajectory;
};

/// Steers the single evader to the target point with an off-bang-off
/// control (Definition-style success: final position within tolerance, final
/// velocity unconstrained). Two-stage search over (t2, t_f): coarse grid,
/// then derivative-free simplex refinement from the best cell. Failure is a
/// result (reached = false) carrying the best candidate, not an exception.
ReachResult reach_point(const SystemState& initial, const KernelSet& kernels,
                        const FrictionParams& friction, const ControlBounds& bounds,
                        const ReachSpec& spec);

/// Sequential reach_point legs, each starting from the end state of the
/// previous leg. Stops at the first failed leg (partial result).
std::vector<ReachResult> reach_waypoints(const SystemState& initial, const KernelSet& kernels,
                                         const FrictionParams& friction,
                                         const ControlBounds& bounds,
                                         const std::vector<Vec2>& targets, const ReachSpec& spec,
                                         const std::vector<double>* kappa_c_per_leg = nullptr);

struct ConstantReachSpec {
  Vec2 target{0.0, 0.0};
  double tolerance = 0.05;
  double tf_min = 1.0;
  double tf_max = 15.0;
  int grid = 25;
  int refine_evals = 200;
  int n_steps = 1000;
};

struct ConstantReachResult {
  double kappa_c = 0.0;
  double t_f = 0.0;
  double achieved_error = 0.0;
  bool reached = false;
  Trajectory trajectory;
};

/// Reach with kappa^p = 1 and a single constant circumvention control shared
/// by all drivers: derivative-free minimization of |u_e(t_f) - target|^2
/// over (kappa_c, t_f).
ConstantReachResult constant_control_reach(const SystemState& initial, const KernelSet& kernels,
                                           const FrictionParams& friction,
                                           const ControlBounds& bounds,
                                           const ConstantReachSpec& spec);

}  // namespace gbr
