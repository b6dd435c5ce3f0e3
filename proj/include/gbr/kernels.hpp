#pragma once

#include <string>

#include "gbr/errors.hpp"

namespace gbr {

/// One radial interaction kernel, restricted to a closed set of analytic
/// families so that configurations stay serializable and the force Jacobians
/// used by the adjoint solver stay analytic.
///
/// Families:
///   Constant        k(r) = a
///   InversePower    k(r) = a / r^p
///   PowerDifference k(r) = a * ((b/r)^p - (b/r)^q)
class RadialKernel {
 public:
  enum class Family { Constant, InversePower, PowerDifference };

  static RadialKernel constant(double value);
  static RadialKernel inverse_power(double coeff, double exponent);
  static RadialKernel power_difference(double coeff, double scale, double p, double q);
  static RadialKernel zero() { return constant(0.0); }

  double operator()(double r) const;
  /// d k / d r, analytic per family.
  double derivative(double r) const;
  double limit_at_infinity() const;

  Family family = Family::Constant;
  double a = 0.0;  // coefficient
  double b = 0.0;  // length scale (PowerDifference only)
  double p = 0.0;  // exponent
  double q = 0.0;  // second exponent (PowerDifference only)
};

/// The four interaction kernels of the model plus the limit gamma_m of the
/// pursuit kernel at infinity.
struct KernelSet {
  RadialKernel f_d;    // driver pursuit kernel
  RadialKernel f_e;    // evader repulsion kernel
  RadialKernel psi_d;  // driver-driver repulsion
  RadialKernel psi_e;  // evader-evader flocking kernel
  double gamma_m = 0.0;

  /// f_d = 1, f_e = 1/r^2, psi_d = 1/(2 r^4),
  /// psi_e = 10 ((0.1)^2/r^2 - (0.1)^4/r^4), gamma_m = 1.
  static KernelSet defaults();
};

/// Relative force f(r) = f_d(r) - f_e(r). Throws std::domain_error when the
/// result is not finite (r at or below the kernel singularity).
double eval_relative_force(const KernelSet& k, double r);

/// d f / d r.
double relative_force_derivative(const KernelSet& k, double r);

/// Unique sign-change root r_p of the relative force, |f(r_p)| < 1e-12.
/// Bracket search expands geometrically over [1e-3, 1e3]; throws KernelError
/// when no sign change is found.
double solve_rp(const KernelSet& k);

/// Circumvention equilibrium radius: the root r_c >= r_p of
/// f(r_c) = (kappa_c / nu)^2. Requires |kappa_c| < nu * sqrt(gamma_m);
/// throws KernelError otherwise (no orbit).
double solve_rc(const KernelSet& k, double kappa_c, double nu);

/// Values at or above this cap mean the potential saturated (singular f_e
/// integrated too close to r = 0).
inline constexpr double kPotentialSaturation = 1e12;

/// Radial potential P(r) = integral of s f(s) ds from r_p to r, by adaptive
/// quadrature. Saturates at kPotentialSaturation instead of overflowing.
double potential(const KernelSet& k, double r);

/// Same integral with an explicit r_p (saves the repeated root solve when
/// evaluating along a trajectory).
double potential(const KernelSet& k, double r, double r_p);

/// Numerically checks the structural invariants (f_d bounded nonnegative,
/// f_e nonnegative vanishing at infinity, relative-force sign pattern with
/// f'(r_p) > 0). Throws KernelError naming the violated condition.
void validate_kernel_set(const KernelSet& k);

}  // namespace gbr
