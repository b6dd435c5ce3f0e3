#include "gbr/diagnostics.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace gbr {

RelativeState relative_state(const SystemState& state) {
  if (state.drivers() != 1 || state.evaders() != 1)
    throw std::invalid_argument("relative state requires one driver and one evader");
  return {state.driver_pos[0] - state.evader_pos[0], state.driver_vel[0] - state.evader_vel[0]};
}

double energy(const RelativeState& rel, const KernelSet& kernels, double r_p) {
  return 0.5 * rel.v.squaredNorm() + potential(kernels, rel.u.norm(), r_p);
}

double energy(const RelativeState& rel, const KernelSet& kernels) {
  return energy(rel, kernels, solve_rp(kernels));
}

double lyapunov_kappa(const RelativeState& rel, double kappa_c, double nu,
                      const KernelSet& kernels, double r_p) {
  return energy(rel, kernels, r_p) - (kappa_c / nu) * perp(rel.u).dot(rel.v);
}

double lyapunov_kappa(const RelativeState& rel, double kappa_c, double nu,
                      const KernelSet& kernels) {
  return lyapunov_kappa(rel, kappa_c, nu, kernels, solve_rp(kernels));
}

std::pair<Vec2, Vec2> pursuit_reference_at(const PursuitReference& ref, double t) {
  const Vec2 ue = ref.slope() * t + ref.u_e_star;
  return {ue + ref.u_star(), ue};
}

CircumventionReference CircumventionReference::from_parameters(const KernelSet& kernels,
                                                               double kappa_c, double nu,
                                                               double phi1, const Vec2& center) {
  CircumventionReference ref;
  ref.phi1 = phi1;
  ref.center = center;
  ref.kappa_c = kappa_c;
  ref.nu = nu;
  ref.r_c = solve_rc(kernels, kappa_c, nu);
  const double w = kappa_c / nu;
  ref.w = w;
  // Forced-oscillator response u'' + nu u' = F e^{i(wt+phi1)} evaluated per
  // agent; complex arithmetic keeps the phases right for either sign of
  // kappa_c.
  const std::complex<double> denom(-w * w, nu * w);
  const std::complex<double> ephi1 = std::polar(1.0, phi1);
  const std::complex<double> ce = -kernels.f_e(ref.r_c) * ref.r_c * ephi1 / denom;
  const std::complex<double> cd =
      (std::complex<double>(-kernels.f_d(ref.r_c), kappa_c)) * ref.r_c * ephi1 / denom;
  ref.r_e = std::abs(ce);
  ref.phi_e = std::arg(ce);
  ref.r_d = std::abs(cd);
  ref.phi_d = std::arg(cd);
  return ref;
}

namespace {

Vec2 on_circle(const Vec2& center, double radius, double angle) {
  return center + radius * Vec2(std::cos(angle), std::sin(angle));
}

}  // namespace

std::pair<Vec2, Vec2> circumvention_reference_at(const CircumventionReference& ref, double t) {
  const double w = ref.angular_velocity();
  return {on_circle(ref.center, ref.r_d, w * t + ref.phi_d),
          on_circle(ref.center, ref.r_e, w * t + ref.phi_e)};
}

std::pair<Vec2, Vec2> circumvention_reference_velocity(const CircumventionReference& ref,
                                                       double t) {
  const double w = ref.angular_velocity();
  const Vec2 td(-std::sin(w * t + ref.phi_d), std::cos(w * t + ref.phi_d));
  const Vec2 te(-std::sin(w * t + ref.phi_e), std::cos(w * t + ref.phi_e));
  return {w * ref.r_d * td, w * ref.r_e * te};
}

namespace {

int tail_begin(const Trajectory& traj, double tail_fraction) {
  if (tail_fraction <= 0.0 || tail_fraction > 1.0)
    throw std::invalid_argument("tail fraction must lie in (0, 1]");
  const int n = traj.steps();
  const int k0 = static_cast<int>(std::ceil((1.0 - tail_fraction) * n));
  if (n + 1 - k0 < 4) throw std::invalid_argument("trajectory tail too short to fit");
  return k0;
}

void require_relative_diagnostics(const Trajectory& traj, const FrictionParams& friction) {
  if (traj.drivers() != 1 || traj.evaders() != 1)
    throw std::invalid_argument("diagnostic requires one driver and one evader");
  if (!friction.equal_friction())
    throw std::invalid_argument("diagnostic requires equal friction (relative-equation theory)");
}

// Least-squares line a + b t through the given samples.
std::pair<Vec2, Vec2> fit_line(const std::vector<double>& ts, const std::vector<Vec2>& ps) {
  const int n = static_cast<int>(ts.size());
  double st = 0.0, stt = 0.0;
  Vec2 sp = Vec2::Zero(), stp = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    st += ts[i];
    stt += ts[i] * ts[i];
    sp += ps[i];
    stp += ts[i] * ps[i];
  }
  const double det = n * stt - st * st;
  const Vec2 b = (static_cast<double>(n) * stp - st * sp) / det;
  const Vec2 a = (sp - b * st) / n;
  return {a, b};
}

struct CircleFit {
  Vec2 center;
  double radius;
};

CircleFit fit_circle(const std::vector<Vec2>& ps) {
  // Kasa: |p|^2 = 2 c.p + (r^2 - |c|^2), linear in (c_x, c_y, d).
  Eigen::MatrixXd A(ps.size(), 3);
  Eigen::VectorXd rhs(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) {
    A(i, 0) = 2.0 * ps[i].x();
    A(i, 1) = 2.0 * ps[i].y();
    A(i, 2) = 1.0;
    rhs(i) = ps[i].squaredNorm();
  }
  const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
  CircleFit fit{Vec2(sol[0], sol[1]), std::sqrt(std::max(0.0, sol[2] + sol.head<2>().squaredNorm()))};
  // One Gauss-Newton step on sum(|p - c| - r)^2.
  Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
  Eigen::Vector3d Jtr = Eigen::Vector3d::Zero();
  for (const Vec2& p : ps) {
    const Vec2 d = p - fit.center;
    const double rho = d.norm();
    if (rho < 1e-12) continue;
    Eigen::Vector3d row;
    row << -d.x() / rho, -d.y() / rho, -1.0;
    JtJ += row * row.transpose();
    Jtr += row * (rho - fit.radius);
  }
  const Eigen::Vector3d step = JtJ.ldlt().solve(-Jtr);
  fit.center += Vec2(step[0], step[1]);
  fit.radius += step[2];
  return fit;
}

// Slope/intercept of the unwrapped phase of (p - center) over time.
std::pair<double, double> fit_phase(const std::vector<double>& ts, const std::vector<Vec2>& ps,
                                    const Vec2& center) {
  std::vector<double> phase(ps.size());
  double prev = std::atan2(ps[0].y() - center.y(), ps[0].x() - center.x());
  phase[0] = prev;
  double offset = 0.0;
  for (size_t i = 1; i < ps.size(); ++i) {
    const double raw = std::atan2(ps[i].y() - center.y(), ps[i].x() - center.x());
    double delta = raw - prev;
    while (delta > M_PI) delta -= 2.0 * M_PI, offset -= 2.0 * M_PI;
    while (delta < -M_PI) delta += 2.0 * M_PI, offset += 2.0 * M_PI;
    phase[i] = raw + offset;
    prev = raw;
  }
  const int n = static_cast<int>(ts.size());
  double st = 0.0, stt = 0.0, sp = 0.0, stp = 0.0;
  for (int i = 0; i < n; ++i) {
    st += ts[i];
    stt += ts[i] * ts[i];
    sp += phase[i];
    stp += ts[i] * phase[i];
  }
  const double det = n * stt - st * st;
  const double slope = (n * stp - st * sp) / det;
  const double intercept = (sp - slope * st) / n;
  return {slope, intercept};
}

}  // namespace

std::pair<PursuitReference, double> fit_pursuit(const Trajectory& traj, const KernelSet& kernels,
                                                const FrictionParams& friction,
                                                double tail_fraction) {
  require_relative_diagnostics(traj, friction);
  const int k0 = tail_begin(traj, tail_fraction);
  for (int k = k0; k <= traj.steps(); ++k) {
    if (std::abs(traj.controls[k][0].kp - 1.0) > 1e-12 || std::abs(traj.controls[k][0].kc) > 1e-12)
      throw std::invalid_argument("fit_pursuit: tail controls must be kp=1, kc=0");
  }
  std::vector<double> ts;
  std::vector<Vec2> ue, rel;
  for (int k = k0; k <= traj.steps(); ++k) {
    ts.push_back(traj.time_at(k));
    ue.push_back(traj.states[k].evader_pos[0]);
    rel.push_back(traj.states[k].driver_pos[0] - traj.states[k].evader_pos[0]);
  }
  const auto [a, b] = fit_line(ts, ue);

  PursuitReference ref;
  ref.nu = friction.common_nu();
  ref.r_p = solve_rp(kernels);
  ref.f_d_rp = kernels.f_d(ref.r_p);
  Vec2 mean_rel = Vec2::Zero();
  for (const Vec2& r : rel) mean_rel += r;
  mean_rel /= static_cast<double>(rel.size());
  ref.phi0 = std::atan2(mean_rel.y(), mean_rel.x());
  ref.u_e_star = a;

  double residual = 0.0;
  for (size_t i = 0; i < ts.size(); ++i)
    residual = std::max(residual, (ue[i] - (a + b * ts[i])).norm());
  return {ref, residual};
}

std::pair<CircumventionReference, double> fit_circumvention(const Trajectory& traj,
                                                            const KernelSet& kernels,
                                                            const FrictionParams& friction,
                                                            double tail_fraction) {
  require_relative_diagnostics(traj, friction);
  const int k0 = tail_begin(traj, tail_fraction);
  const double kc = traj.controls[k0][0].kc;
  if (std::abs(kc) < 1e-12)
    throw std::invalid_argument("fit_circumvention: tail circumvention control must be nonzero");
  for (int k = k0; k <= traj.steps(); ++k) {
    if (std::abs(traj.controls[k][0].kp - 1.0) > 1e-12 ||
        std::abs(traj.controls[k][0].kc - kc) > 1e-12)
      throw std::invalid_argument("fit_circumvention: tail controls must be kp=1, kc=const");
  }
  std::vector<double> ts;
  std::vector<Vec2> ue, ud;
  for (int k = k0; k <= traj.steps(); ++k) {
    ts.push_back(traj.time_at(k));
    ue.push_back(traj.states[k].evader_pos[0]);
    ud.push_back(traj.states[k].driver_pos[0]);
  }
  const CircleFit ce = fit_circle(ue);
  const CircleFit cd = fit_circle(ud);

  CircumventionReference ref;
  ref.kappa_c = kc;
  ref.nu = friction.common_nu();
  ref.center = 0.5 * (ce.center + cd.center);
  ref.r_e = ce.radius;
  ref.r_d = cd.radius;
  double rc = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) rc += (ud[i] - ue[i]).norm();
  ref.r_c = rc / ts.size();
  const auto [we, pe] = fit_phase(ts, ue, ref.center);
  const auto [wd, pd] = fit_phase(ts, ud, ref.center);
  (void)wd;
  ref.w = we;
  ref.phi_e = pe;
  ref.phi_d = pd;
  // Recover the relative phase phi1 from the phase fit of u_d - u_e.
  std::vector<Vec2> rel(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) rel[i] = ud[i] - ue[i];
  const auto [wr, p1] = fit_phase(ts, rel, Vec2::Zero());
  (void)wr;
  ref.phi1 = p1;

  double residual = 0.0;
  for (const Vec2& p : ue)
    residual = std::max(residual, std::abs((p - ref.center).norm() - ref.r_e));
  return {ref, residual};
}

DissipationReport check_dissipation(const Trajectory& traj, DissipationMode mode,
                                    const KernelSet& kernels, const FrictionParams& friction) {
  if (!friction.equal_friction())
    throw std::invalid_argument("check_dissipation requires equal friction");
  const double nu = friction.common_nu();
  DissipationReport report;
  report.mode = mode;

  auto require_controls = [&](double kp, bool kc_zero) {
    for (const auto& cs : traj.controls)
      for (const DriverControl& c : cs) {
        if (std::abs(c.kp - kp) > 1e-12)
          throw std::invalid_argument("check_dissipation: controls do not match the mode");
        if (kc_zero && std::abs(c.kc) > 1e-12)
          throw std::invalid_argument("check_dissipation: controls do not match the mode");
      }
  };

  if (mode == DissipationMode::Release) {
    require_controls(0.0, true);
    if (traj.drivers() != 1)
      throw std::invalid_argument("release-mode decay check requires a single driver");
    const double v0 = traj.front().driver_vel[0].norm();
    for (int k = 0; k <= traj.steps(); ++k) {
      const double expect = v0 * std::exp(-nu * traj.time_at(k));
      report.max_violation =
          std::max(report.max_violation, std::abs(traj.states[k].driver_vel[0].norm() - expect));
    }
    report.initial_value = v0;
    report.final_value = traj.back().driver_vel[0].norm();
    return report;
  }

  if (traj.drivers() != 1 || traj.evaders() != 1)
    throw std::invalid_argument("energy diagnostics require one driver and one evader");
  const double r_p = solve_rp(kernels);
  const double kc = traj.controls.front()[0].kc;
  if (mode == DissipationMode::Pursuit) {
    require_controls(1.0, true);
  } else {
    require_controls(1.0, false);
    for (const auto& cs : traj.controls)
      if (std::abs(cs[0].kc - kc) > 1e-12)
        throw std::invalid_argument("check_dissipation: circumvention control must be constant");
  }
  double prev = 0.0;
  for (int k = 0; k <= traj.steps(); ++k) {
    const RelativeState rel = relative_state(traj.states[k]);
    const double value = mode == DissipationMode::Pursuit
                             ? energy(rel, kernels, r_p)
                             : lyapunov_kappa(rel, kc, nu, kernels, r_p);
    if (k == 0)
      report.initial_value = value;
    else
      report.max_violation = std::max(report.max_violation, value - prev);
    prev = value;
    report.final_value = value;
  }
  return report;
}

double winding_angle(const Trajectory& traj, int k_begin, int k_end) {
  double total = 0.0;
  double prev = 0.0;
  for (int k = k_begin; k <= k_end; ++k) {
    const Vec2 d = traj.states[k].driver_pos[0] - barycenter(traj.states[k]);
    const double angle = std::atan2(d.y(), d.x());
    if (k > k_begin) {
      double delta = angle - prev;
      while (delta > M_PI) delta -= 2.0 * M_PI;
      while (delta < -M_PI) delta += 2.0 * M_PI;
      total += delta;
    }
    prev = angle;
  }
  return total;
}

}  // namespace gbr
