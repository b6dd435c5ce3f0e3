#pragma once

#include <functional>
#include <utility>

#include "gbr/controls.hpp"
#include "gbr/kernels.hpp"
#include "gbr/state.hpp"
#include "gbr/trajectory.hpp"

namespace gbr {

/// Time derivative of a SystemState.
struct Derivative {
  std::vector<Vec2> driver_vel;
  std::vector<Vec2> driver_acc;
  std::vector<Vec2> evader_vel;
  std::vector<Vec2> evader_acc;
};

/// Model-wide options that select between the two printed sign conventions
/// for the evader-evader kernel. Attractive-at-range (+1) makes psi_e > 0
/// pull evaders together, which is the convention that produces flocking;
/// -1 keeps the opposite sign for comparison.
struct DynamicsOptions {
  double psi_e_sign = +1.0;
  double min_separation = 1e-6;  // driver-evader distances below this abort
};

/// Right-hand side of the general M-driver / N-evader system:
///   driver j:  a = -kp_j f_d(|d_j|) d_j + kc_j d_j^perp - nu_dj v_dj
///                  + (1/M) sum_{l != j} psi_d(|u_dj - u_dl|)(u_dj - u_dl),
///              d_j = u_dj - barycenter(evaders)
///   evader i:  a = -(1/M) sum_j f_e(|u_dj - u_ei|)(u_dj - u_ei)
///                  + s (1/N) sum_{k != i} psi_e(|u_ek - u_ei|)(u_ek - u_ei)
///                  - nu_ei v_ei
/// Throws SingularityError (with the pair indices) when a driver-evader
/// distance falls below options.min_separation.
Derivative rhs_general(const SystemState& state, const std::vector<DriverControl>& controls,
                       const KernelSet& kernels, const FrictionParams& friction,
                       const DynamicsOptions& options = {});

/// Closed equation of the relative position u = u_d - u_e for the
/// one-driver/one-evader system with equal friction:
///   u'' = -(kp f_d(|u|) - f_e(|u|)) u - nu u' + kc u^perp.
/// Returns (du/dt, dv/dt). Throws SingularityError at |u| below the guard.
std::pair<Vec2, Vec2> rhs_relative(const Vec2& u, const Vec2& v, double kp, double kc,
                                   const KernelSet& kernels, double nu);

/// Classical fixed-step RK4 over [0, t_f] with n_steps uniform steps.
/// Controls are sampled at every stage time; FeedbackSchedule is rejected
/// here (use run_closed_loop, which owns the hysteresis state).
/// Throws DivergenceError when the state becomes non-finite.
Trajectory integrate(const SystemState& initial, const ControlSchedule& schedule,
                     const KernelSet& kernels, const FrictionParams& friction, double t_f,
                     int n_steps, const ControlBounds& bounds = {},
                     const DynamicsOptions& options = {});

/// One RK4 step with a caller-supplied control provider (time and stage
/// state to per-driver controls). Shared by integrate and the closed loop.
using ControlProvider =
    std::function<std::vector<DriverControl>(double t, const SystemState& stage_state)>;
SystemState rk4_step(const SystemState& state, double t, double h, const ControlProvider& controls,
                     const KernelSet& kernels, const FrictionParams& friction,
                     const DynamicsOptions& options);

/// Same relative dynamics integrated directly (diagnostic reference path).
struct RelativeTrajectory {
  double t_f = 0.0;
  std::vector<Vec2> u;
  std::vector<Vec2> v;
  double dt() const { return u.size() > 1 ? t_f / (u.size() - 1) : 0.0; }
};
RelativeTrajectory integrate_relative(const Vec2& u0, const Vec2& v0,
                                      const ControlSchedule& schedule, const KernelSet& kernels,
                                      double nu, double t_f, int n_steps,
                                      const ControlBounds& bounds = {});

// --- flat-vector view used by the adjoint solver ------------------------
// Layout: [driver positions (2M) | evader positions (2N)
//          | driver velocities (2M) | evader velocities (2N)].

Eigen::VectorXd pack_state(const SystemState& state);
SystemState unpack_state(const Eigen::VectorXd& x, int drivers, int evaders, double t = 0.0);

/// RHS on the flat layout.
Eigen::VectorXd rhs_flat(const Eigen::VectorXd& x, const std::vector<DriverControl>& controls,
                         int drivers, int evaders, const KernelSet& kernels,
                         const FrictionParams& friction, const DynamicsOptions& options = {});

/// Dense Jacobian d(rhs)/d(state) on the flat layout, assembled from the
/// analytic kernel derivatives.
Eigen::MatrixXd rhs_jacobian(const Eigen::VectorXd& x, const std::vector<DriverControl>& controls,
                             int drivers, int evaders, const KernelSet& kernels,
                             const FrictionParams& friction, const DynamicsOptions& options = {});

/// d(rhs)/d(kappa^c_j) and d(rhs)/d(kappa^p_j): the control enters linearly,
/// so these are state-dependent vectors.
Eigen::VectorXd rhs_dkc(const Eigen::VectorXd& x, int driver, int drivers, int evaders);
Eigen::VectorXd rhs_dkp(const Eigen::VectorXd& x, int driver, int drivers, int evaders,
                        const KernelSet& kernels);

}  // namespace gbr
