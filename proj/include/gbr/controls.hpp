#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "gbr/state.hpp"
#include "gbr/vec.hpp"

namespace gbr {

/// Box bounds for the pursuit and circumvention controls.
struct ControlBounds {
  double kp_min = 0.0;
  double kp_max = 1.0;
  double kc_min = -5.0;
  double kc_max = 5.0;

  double clamp_kp(double v) const { return std::min(kp_max, std::max(kp_min, v)); }
  double clamp_kc(double v) const { return std::min(kc_max, std::max(kc_min, v)); }
  void require_valid() const;
};

/// Control pair (kappa^p, kappa^c) for one driver at one instant.
struct DriverControl {
  double kp = 1.0;
  double kc = 0.0;
};

/// Parameters of the closed-loop laws (angle-steering circumvention plus
/// hysteresis pursuit stopping). Held by FeedbackSchedule; the laws
/// themselves live in feedback.hpp.
struct FeedbackParams {
  double kappa_bar_c = 3.0;  // circumvention gain
  double gather_on = 0.3;    // pursuit stops when the gathering radius exceeds this
  double gather_off = 0.27;  // ... and resumes only below this
  Vec2 target{0.0, 0.0};

  void require_valid() const;
};

/// kappa^p constant, kappa^c equal to a constant on [t1, t2] (inclusive at
/// both ends) and zero outside.
struct OffBangOffSchedule {
  double t1 = 0.0;
  double t2 = 0.0;
  std::vector<DriverControl> values;  // per driver: kp throughout, kc on [t1,t2]
};

struct ConstantSchedule {
  std::vector<DriverControl> values;
};

/// Per-driver control samples on a grid over [0, t_end], linearly
/// interpolated between nodes. An empty `knots` vector means a uniform grid;
/// time-rescaled schedules carry explicit strictly-increasing knots.
struct SampledSchedule {
  double t_end = 1.0;
  std::vector<double> knots;            // empty => uniform nodes over [0, t_end]
  std::vector<Eigen::VectorXd> kp;      // one vector of node values per driver
  std::vector<Eigen::VectorXd> kc;

  int drivers() const { return static_cast<int>(kc.size()); }
  int nodes() const { return kc.empty() ? 0 : static_cast<int>(kc[0].size()); }
  double knot(int i) const;

  static SampledSchedule uniform(int drivers, int nodes, double t_end,
                                 double kp_value = 1.0, double kc_value = 0.0);
};

/// Controls computed from the current state by the feedback laws.
struct FeedbackSchedule {
  FeedbackParams params;
};

using ControlSchedule =
    std::variant<ConstantSchedule, OffBangOffSchedule, SampledSchedule, FeedbackSchedule>;

/// Control values at time t, clamped to bounds. FeedbackSchedule requires
/// the state argument (throws std::invalid_argument without it); the
/// hysteresis pursuit bit is owned by the closed-loop runner, so sampling a
/// FeedbackSchedule here reports kappa^p = kp_max.
std::vector<DriverControl> sample(const ControlSchedule& schedule, double t,
                                  const ControlBounds& bounds,
                                  const SystemState* state = nullptr);

/// Element-wise clamp of every node value. Idempotent.
SampledSchedule project_bounds(const SampledSchedule& schedule, const ControlBounds& bounds);

/// Free-final-time reparameterization. T maps s in [0,1] to t in [0, t_f];
/// its slope is the piecewise-constant speed profile, renormalized so that
/// T(1) = t_f exactly.
struct TimeScaling {
  double t_f = 1.0;
  Eigen::VectorXd speeds;  // one positive value per segment of a uniform s-grid

  static TimeScaling uniform(double t_f, int segments = 1);
  /// Renormalizes so the mean speed equals t_f; clamps segments to
  /// [c_lo, c_hi] first when those are positive.
  void normalize(double c_lo = 0.0, double c_hi = 0.0);

  int segments() const { return static_cast<int>(speeds.size()); }
  /// T(s): cumulative integral of the speed profile.
  double map(double s) const;
  /// T^{-1}(t).
  double inverse_map(double t) const;
};

/// Composes a schedule given in s in [0,1] with the scaling map: returns the
/// schedule in physical time, kappa(t) = kappa_bar(T^{-1}(t)). The result
/// carries the image knots T(s_k), where the composition is exact because T
/// is affine between s-nodes.
SampledSchedule rescale_time(const SampledSchedule& schedule_in_s, const TimeScaling& scaling);

/// Exact integral of mean_j |kappa^c_j(t)|^2 dt over the schedule domain
/// (piecewise-quadratic integrand, closed form per segment).
double control_effort(const SampledSchedule& schedule);

}  // namespace gbr
