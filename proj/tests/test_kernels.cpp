#include <doctest.h>

#include <cmath>

#include "gbr/kernels.hpp"

using namespace gbr;

namespace {
// Closed form of the default-kernel potential, used as the independent check
// on the quadrature: P(r) = (r^2 - 1)/2 - ln r.
double default_potential(double r) { return 0.5 * (r * r - 1.0) - std::log(r); }
}  // namespace

TEST_CASE("relative force of the default kernels") {
  const KernelSet k = KernelSet::defaults();
  CHECK(eval_relative_force(k, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eval_relative_force(k, 2.0) == doctest::Approx(0.75));
  CHECK(eval_relative_force(k, 0.5) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(eval_relative_force(k, 0.0), std::domain_error);
  CHECK_THROWS_AS(eval_relative_force(k, -1.0), std::domain_error);
}

TEST_CASE("solve_rp finds the sign-change root") {
  const KernelSet k = KernelSet::defaults();
  CHECK(solve_rp(k) == doctest::Approx(1.0).epsilon(1e-12));

  KernelSet k4 = k;
  k4.f_d = RadialKernel::constant(4.0);
  k4.gamma_m = 4.0;
  CHECK(solve_rp(k4) == doctest::Approx(0.5).epsilon(1e-12));

  KernelSet degenerate = k;
  degenerate.f_d = RadialKernel::constant(0.0);
  degenerate.gamma_m = 0.0;
  CHECK_THROWS_AS(solve_rp(degenerate), KernelError);
}

TEST_CASE("solve_rc equilibrium radius") {
  const KernelSet k = KernelSet::defaults();
  CHECK(solve_rc(k, 0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  // f(r) = 1 - 1/r^2 = 1/4  =>  r = 2/sqrt(3)
  CHECK(solve_rc(k, 1.0, 2.0) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-10));
  CHECK_THROWS_AS(solve_rc(k, 2.0, 2.0), KernelError);  // |kc| = nu sqrt(gamma_m)
}

TEST_CASE("solve_rc residual and monotonicity in |kappa_c|") {
  const KernelSet k = KernelSet::defaults();
  const double nu = 2.0;
  double prev = 0.0;
  for (double kc = 0.1; kc < 1.9; kc += 0.2) {
    const double rc = solve_rc(k, kc, nu);
    CHECK(std::abs(eval_relative_force(k, rc) - (kc / nu) * (kc / nu)) < 1e-10);
    CHECK(rc > prev);
    prev = rc;
    CHECK(solve_rc(k, -kc, nu) == doctest::Approx(rc).epsilon(1e-12));
  }
}

TEST_CASE("potential against the closed form") {
  const KernelSet k = KernelSet::defaults();
  CHECK(potential(k, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(potential(k, 2.0) == doctest::Approx(default_potential(2.0)).epsilon(1e-10));
  // 0.5*(0.01 - 1) - ln(0.1) = 1.8075851...
  CHECK(potential(k, 0.1) == doctest::Approx(default_potential(0.1)).epsilon(1e-10));
  for (double r = 0.05; r <= 20.0; r *= 1.31) {
    CHECK(std::abs(potential(k, r) - default_potential(r)) < 1e-9);
  }
}

TEST_CASE("kernel set validation") {
  CHECK_NOTHROW(validate_kernel_set(KernelSet::defaults()));
  KernelSet bad = KernelSet::defaults();
  bad.f_d = RadialKernel::constant(-1.0);
  CHECK_THROWS_AS(validate_kernel_set(bad), KernelError);
  KernelSet wrong_gamma = KernelSet::defaults();
  wrong_gamma.gamma_m = 0.5;
  CHECK_THROWS_AS(validate_kernel_set(wrong_gamma), KernelError);
}

TEST_CASE("psi_e changes sign at its length scale") {
  const KernelSet k = KernelSet::defaults();
  CHECK(k.psi_e(0.05) < 0.0);
  CHECK(k.psi_e(0.1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(k.psi_e(1.0) > 0.0);
  // derivative consistency of every family against central differences
  for (const RadialKernel& kern : {k.f_d, k.f_e, k.psi_d, k.psi_e}) {
    for (double r = 0.3; r < 5.0; r += 0.7) {
      const double fd = (kern(r + 1e-6) - kern(r - 1e-6)) / 2e-6;
      CHECK(kern.derivative(r) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}
