#pragma once

#include <optional>
#include <vector>

#include "gbr/dynamics.hpp"
#include "gbr/reach.hpp"

namespace gbr {

/// Regularization weights of the cost functionals: delta1 scales the running
/// control cost, delta2 the final time, delta3 the stabilization state
/// penalties.
struct CostWeights {
  double delta1 = 0.001;
  double delta2 = 0.0;
  double delta3 = 0.0;
};

enum class CostKind { Guidance, Stabilization };
enum class FinalTimeMode { Fixed, FreeScalar, FreeProfile };

struct CostBreakdown {
  double total = 0.0;             // weighted objective
  double position_error_sq = 0.0; // terminal (1/N) sum |u_ei(t_f) - u_f|^2
  double position_error = 0.0;    // mean final evader distance to the target
  double running_integral = 0.0;  // raw integral of mean_j |kappa^c_j|^2
  double tracking_integral = 0.0; // integral of (1/N) sum |u_ei - u_f|^2
  double state_integral = 0.0;    // integral of the delta3-weighted state terms
  double time_term = 0.0;         // t_f
};

/// Guidance cost of a simulated trajectory (controls read off the trajectory
/// grid, trapezoidal quadrature):
///   J = (1/N) sum_i |u_ei(t_f) - u_f|^2
///       + (delta1/M) sum_j int |kappa^c_j|^2 dt + delta2 t_f.
std::pair<double, CostBreakdown> cost_guidance(const Trajectory& traj, const CostWeights& weights,
                                               const Vec2& target);

/// Stabilization cost:
///   J = int (1/N) sum_i |u_ei - u_f|^2 dt
///       + delta3 int [ (1/N) sum_i |v_ei|^2
///                      + (1/M) sum_j (|u_dj - u_f|^2 + |v_dj|^2) ] dt
///       + (delta1/M) sum_j int |kappa^c_j|^2 dt.
std::pair<double, CostBreakdown> cost_stabilization(const Trajectory& traj,
                                                    const CostWeights& weights, const Vec2& target);

/// One optimal-control problem instance. Decision variables are the
/// per-driver kappa^c node values (kappa^p optionally too) and, depending on
/// time_mode, the scalar final time or a piecewise speed profile.
struct OcpProblem {
  SystemState initial;
  KernelSet kernels;
  FrictionParams friction;
  DynamicsOptions dynamics;
  ControlBounds bounds;
  CostKind kind = CostKind::Guidance;
  CostWeights weights;
  Vec2 target{0.0, 0.0};
  int n_steps = 1000;
  double t_f = 10.0;  // fixed value or free-time initial guess
  FinalTimeMode time_mode = FinalTimeMode::Fixed;
  bool optimize_kp = false;
  int profile_segments = 20;  // FreeProfile mode; must divide n_steps
  /// Initial guess, rows = drivers, cols = n_steps + 1 nodes. Empty means
  /// kappa^p = 1, kappa^c = 0.
  Eigen::MatrixXd kc0;
  Eigen::MatrixXd kp0;
  int max_iterations = 500;
  double cost_tol = 1e-8;    // relative cost change
  double grad_tol = 1e-6;    // projected-gradient infinity norm
  double armijo_c = 1e-4;
  double initial_step = 1.0;
  /// Final-time clamp, relative to the initial t_f.
  double tf_factor_lo = 0.1;
  double tf_factor_hi = 10.0;
};

/// Cost and exact gradient of the discrete RK4 cost (reverse-mode through
/// the integration steps; this is discretize-then-optimize, so the gradient
/// matches central finite differences of the same discrete cost to roundoff).
struct AdjointResult {
  Eigen::MatrixXd costate;      // 4(M+N) x (n+1): dJ/dx_k at every node
  Eigen::MatrixXd grad_kc;      // drivers x (n+1)
  Eigen::MatrixXd grad_kp;      // filled when optimize_kp
  double grad_tf = 0.0;         // uniform-scaling derivative dJ/dt_f
  Eigen::VectorXd grad_speeds;  // per profile segment (FreeProfile)
  double cost = 0.0;
  CostBreakdown breakdown;
};

/// Forward pass of the s-space formulation: states on the n+1 nodes plus the
/// discrete cost. `speeds` holds one positive entry per profile segment
/// (a single entry means uniform speed t_f).
struct OcpForward {
  std::vector<Eigen::VectorXd> states;
  double cost = 0.0;
  CostBreakdown breakdown;
};
OcpForward ocp_forward(const OcpProblem& problem, const Eigen::MatrixXd& kc,
                       const Eigen::MatrixXd& kp, const Eigen::VectorXd& speeds);

AdjointResult adjoint_solve(const OcpProblem& problem, const Eigen::MatrixXd& kc,
                            const Eigen::MatrixXd& kp, const Eigen::VectorXd& speeds);

struct OcpSolution {
  SampledSchedule schedule;  // optimized controls over [0, t_f]
  double t_f = 0.0;
  TimeScaling scaling;
  CostBreakdown breakdown;
  std::vector<double> cost_history;  // accepted iterates, nonincreasing
  int iterations = 0;
  bool converged = false;  // tolerance hit (vs. iteration cap / stagnation)
  bool stagnated = false;  // line search failed 20 halvings in a row
  Trajectory trajectory;
};

/// Projected gradient descent with Armijo backtracking on the problem's
/// decision variables; every accepted iterate satisfies the control bounds
/// exactly and the cost history is nonincreasing.
OcpSolution solve_ocp(const OcpProblem& problem);

enum class GuessKind { Constant, OffBangOff, Hand };

/// Initial guess factory: Constant runs constant_control_reach, OffBangOff
/// runs reach_point, Hand passes the supplied node values through unchanged.
struct InitialGuess {
  Eigen::MatrixXd kc;
  Eigen::MatrixXd kp;
  double t_f = 0.0;
};
InitialGuess build_initial_guess(const SystemState& initial, const KernelSet& kernels,
                                 const FrictionParams& friction, const ControlBounds& bounds,
                                 const Vec2& target, GuessKind kind, int n_steps,
                                 const std::optional<SampledSchedule>& hand = {},
                                 double hand_t_f = 0.0);

/// Convenience: gradient of the discrete cost by central finite differences
/// (step 1e-5) over every kappa^c node (plus t_f in free-time mode); used to
/// validate the adjoint path.
struct GradientCheck {
  double max_rel_error_kc = 0.0;
  double rel_error_tf = 0.0;
  double max_rel_error_kp = 0.0;
};
GradientCheck validate_gradient(const OcpProblem& problem, double fd_step = 1e-5,
                                int node_stride = 1);

}  // namespace gbr
