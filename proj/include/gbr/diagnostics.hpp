#pragma once

#include <utility>

#include "gbr/kernels.hpp"
#include "gbr/state.hpp"
#include "gbr/trajectory.hpp"

namespace gbr {

/// Relative coordinates of the one-driver/one-evader system:
/// u = u_d - u_e and its velocity.
struct RelativeState {
  Vec2 u;
  Vec2 v;
};

/// Extracts (u_d - u_e, v_d - v_e); requires M = N = 1.
RelativeState relative_state(const SystemState& state);

/// Standard energy E = |v|^2 / 2 + P(|u|).
double energy(const RelativeState& rel, const KernelSet& kernels);
double energy(const RelativeState& rel, const KernelSet& kernels, double r_p);

/// Lyapunov function of the circumvention mode:
/// L_kappa = E - (kappa_c / nu) u^perp . v.
double lyapunov_kappa(const RelativeState& rel, double kappa_c, double nu,
                      const KernelSet& kernels);
double lyapunov_kappa(const RelativeState& rel, double kappa_c, double nu,
                      const KernelSet& kernels, double r_p);

/// Asymptotic linear motion of the pursuit mode: both agents travel with
/// constant velocity -f_d(r_p) u* / nu, the driver offset by u* = r_p e^{i phi0}.
struct PursuitReference {
  double phi0 = 0.0;
  Vec2 u_e_star{0.0, 0.0};
  double r_p = 1.0;
  double f_d_rp = 1.0;
  double nu = 1.0;

  Vec2 u_star() const { return r_p * Vec2(std::cos(phi0), std::sin(phi0)); }
  Vec2 slope() const { return -(f_d_rp / nu) * u_star(); }
};

/// (u_d, u_e) of the reference at time t.
std::pair<Vec2, Vec2> pursuit_reference_at(const PursuitReference& ref, double t);

/// Asymptotic rotational motion of the circumvention mode: concentric
/// circles of radii r_d > r_e around a common center, angular velocity
/// kappa_c / nu. Radii and phases follow from the forced-oscillator response
/// of each agent to the rotating relative position of radius r_c and phase
/// phi1.
struct CircumventionReference {
  double phi1 = 0.0;
  Vec2 center{0.0, 0.0};
  double kappa_c = 0.0;
  double nu = 1.0;
  double r_c = 0.0, r_d = 0.0, r_e = 0.0;
  double phi_d = 0.0, phi_e = 0.0;
  double w = 0.0;  // kappa_c / nu for exact members; the measured value for fits

  double angular_velocity() const { return w; }

  /// Builds the exact family member for admissible (kappa_c, nu); throws
  /// KernelError outside the admissible region.
  static CircumventionReference from_parameters(const KernelSet& kernels, double kappa_c,
                                                double nu, double phi1, const Vec2& center);
};

std::pair<Vec2, Vec2> circumvention_reference_at(const CircumventionReference& ref, double t);
/// (v_d, v_e) of the reference, for seeding exact trajectories.
std::pair<Vec2, Vec2> circumvention_reference_velocity(const CircumventionReference& ref, double t);

/// Least-squares line fit of the evader tail. The residual is the max
/// deviation of the simulated evader positions from the fitted line over the
/// tail. Throws std::invalid_argument when preconditions fail (M=N=1, equal
/// friction, pursuit controls, tail of at least four nodes).
std::pair<PursuitReference, double> fit_pursuit(const Trajectory& traj, const KernelSet& kernels,
                                                const FrictionParams& friction,
                                                double tail_fraction = 0.3);

/// Circle fit (Kasa-style algebraic fit plus one Gauss-Newton step) of the
/// driver/evader tails; the residual is the max radial deviation of the
/// evader from its fitted circle.
std::pair<CircumventionReference, double> fit_circumvention(const Trajectory& traj,
                                                            const KernelSet& kernels,
                                                            const FrictionParams& friction,
                                                            double tail_fraction = 0.3);

enum class DissipationMode { Pursuit, Circumvention, Release };

struct DissipationReport {
  DissipationMode mode;
  /// Pursuit/circumvention: max upward step of the monotone functional.
  /// Release: max deviation of |v_d(t)| from |v_d(0)| e^{-nu t}.
  double max_violation = 0.0;
  double initial_value = 0.0;
  double final_value = 0.0;
};

/// Evaluates the mode's monotone functional at every grid node. Requires
/// constant controls matching the mode and equal friction; pursuit and
/// circumvention additionally require M = N = 1.
DissipationReport check_dissipation(const Trajectory& traj, DissipationMode mode,
                                    const KernelSet& kernels, const FrictionParams& friction);

/// Total winding angle (unwrapped) of u_d - barycenter over the node range
/// [k_begin, k_end].
double winding_angle(const Trajectory& traj, int k_begin, int k_end);

}  // namespace gbr
