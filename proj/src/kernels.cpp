#include "gbr/kernels.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace gbr {

RadialKernel RadialKernel::constant(double value) {
  RadialKernel k;
  k.family = Family::Constant;
  k.a = value;
  return k;
}

RadialKernel RadialKernel::inverse_power(double coeff, double exponent) {
  RadialKernel k;
  k.family = Family::InversePower;
  k.a = coeff;
  k.p = exponent;
  return k;
}

RadialKernel RadialKernel::power_difference(double coeff, double scale, double p, double q) {
  RadialKernel k;
  k.family = Family::PowerDifference;
  k.a = coeff;
  k.b = scale;
  k.p = p;
  k.q = q;
  return k;
}

double RadialKernel::operator()(double r) const {
  switch (family) {
    case Family::Constant:
      return a;
    case Family::InversePower:
      return a / std::pow(r, p);
    case Family::PowerDifference:
      return a * (std::pow(b / r, p) - std::pow(b / r, q));
  }
  return 0.0;
}

double RadialKernel::derivative(double r) const {
  switch (family) {
    case Family::Constant:
      return 0.0;
    case Family::InversePower:
      return -a * p / std::pow(r, p + 1.0);
    case Family::PowerDifference:
      return a * (-p * std::pow(b, p) / std::pow(r, p + 1.0) +
                  q * std::pow(b, q) / std::pow(r, q + 1.0));
  }
  return 0.0;
}

double RadialKernel::limit_at_infinity() const {
  return family == Family::Constant ? a : 0.0;
}

KernelSet KernelSet::defaults() {
  KernelSet k;
  k.f_d = RadialKernel::constant(1.0);
  k.f_e = RadialKernel::inverse_power(1.0, 2.0);
  k.psi_d = RadialKernel::inverse_power(0.5, 4.0);
  k.psi_e = RadialKernel::power_difference(10.0, 0.1, 2.0, 4.0);
  k.gamma_m = 1.0;
  return k;
}

double eval_relative_force(const KernelSet& k, double r) {
  if (r <= 0.0) throw std::domain_error("relative force: r must be positive");
  const double f = k.f_d(r) - k.f_e(r);
  if (!std::isfinite(f)) throw std::domain_error("relative force: non-finite at r=" + std::to_string(r));
  return f;
}

double relative_force_derivative(const KernelSet& k, double r) {
  return k.f_d.derivative(r) - k.f_e.derivative(r);
}

namespace {

// Bisection to |g(root)| < value_tol on a sign-change bracket.
double bisect(const std::function<double(double)>& g, double lo, double hi, double value_tol) {
  double glo = g(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (std::abs(gm) < value_tol && (hi - lo) < 1e-13 * std::max(1.0, mid)) return mid;
    if ((glo < 0.0) == (gm < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

constexpr double kBracketLo = 1e-3;
constexpr double kBracketHi = 1e3;

}  // namespace

double solve_rp(const KernelSet& k) {
  auto f = [&](double r) { return k.f_d(r) - k.f_e(r); };
  double prev = kBracketLo;
  double fprev = f(prev);
  for (double r = kBracketLo; r <= kBracketHi; r *= 1.25) {
    const double fr = f(r);
    if (std::isfinite(fprev) && std::isfinite(fr) && fprev < 0.0 && fr >= 0.0) {
      const double rp = bisect(f, prev, r, 1e-12);
      if (relative_force_derivative(k, rp) <= 0.0)
        throw KernelError("solve_rp: relative force not increasing at its root");
      return rp;
    }
    prev = r;
    fprev = fr;
  }
  throw KernelError("solve_rp: no sign change of f_d - f_e in [1e-3, 1e3]");
}

double solve_rc(const KernelSet& k, double kappa_c, double nu) {
  if (nu <= 0.0) throw KernelError("solve_rc: friction must be positive");
  if (std::abs(kappa_c) >= nu * std::sqrt(k.gamma_m))
    throw KernelError("solve_rc: |kappa_c| >= nu*sqrt(gamma_m), no circumvention orbit");
  const double rp = solve_rp(k);
  const double target = (kappa_c / nu) * (kappa_c / nu);
  if (target == 0.0) return rp;
  auto g = [&](double r) { return (k.f_d(r) - k.f_e(r)) - target; };
  // g(rp) = -target < 0; expand upward until g turns positive.
  double lo = rp;
  for (double hi = rp * 1.25; hi <= kBracketHi; hi *= 1.25) {
    if (g(hi) >= 0.0) return bisect(g, lo, hi, 1e-12);
    lo = hi;
  }
  throw KernelError("solve_rc: relative force never reaches (kappa_c/nu)^2 below r=1e3");
}

namespace {

double adaptive_simpson(const std::function<double(double)>& g, double lo, double hi,
                        double flo, double fmid, double fhi, double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + mid);
  const double rm = 0.5 * (mid + hi);
  const double flm = g(lm);
  const double frm = g(rm);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(g, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(g, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1);
}

double integrate_sf(const KernelSet& k, double lo, double hi, double tol) {
  auto g = [&](double s) { return s * (k.f_d(s) - k.f_e(s)); };
  const double mid = 0.5 * (lo + hi);
  const double flo = g(lo), fmid = g(mid), fhi = g(hi);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  return adaptive_simpson(g, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

}  // namespace

double potential(const KernelSet& k, double r, double r_p) {
  if (r <= 0.0) return kPotentialSaturation;
  if (r == r_p) return 0.0;
  const double sign = r > r_p ? 1.0 : -1.0;
  const double lo = std::min(r, r_p);
  const double hi = std::max(r, r_p);
  const double v = sign * integrate_sf(k, lo, hi, 1e-12);
  if (!std::isfinite(v) || v > kPotentialSaturation) return kPotentialSaturation;
  return v;
}

double potential(const KernelSet& k, double r) { return potential(k, r, solve_rp(k)); }

void validate_kernel_set(const KernelSet& k) {
  const double rp = solve_rp(k);  // throws when the sign pattern is broken
  for (double r = 1e-3; r <= 1e3; r *= 1.5) {
    const double fd = k.f_d(r);
    const double fe = k.f_e(r);
    if (!std::isfinite(fd) || fd < 0.0) throw KernelError("f_d must be finite and nonnegative");
    if (fd > 1e6) throw KernelError("f_d must be bounded");
    if (!std::isfinite(fe) || fe < 0.0) throw KernelError("f_e must be finite and nonnegative for r > 0");
    const double f = fd - fe;
    if (r < rp * (1.0 - 1e-9) && f >= 0.0) throw KernelError("relative force must be negative below r_p");
    if (r > rp * (1.0 + 1e-9) && f < 0.0) throw KernelError("relative force must be nonnegative above r_p");
  }
  if (std::abs(k.f_e(1e9)) > 1e-6) throw KernelError("f_e must vanish at infinity");
  if (std::abs(k.gamma_m - k.f_d.limit_at_infinity()) > 1e-12)
    throw KernelError("gamma_m must equal the limit of f_d at infinity");
  if (k.gamma_m <= 0.0) throw KernelError("gamma_m must be positive");
}

}  // namespace gbr
