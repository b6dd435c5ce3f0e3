#include <doctest.h>

#include <cmath>
#include <random>

#include "gbr/diagnostics.hpp"
#include "gbr/dynamics.hpp"
#include "gbr/errors.hpp"

using namespace gbr;

namespace {

SystemState pair_state(const Vec2& ud, const Vec2& ue, const Vec2& vd = Vec2::Zero(),
                       const Vec2& ve = Vec2::Zero()) {
  SystemState s;
  s.driver_pos = {ud};
  s.driver_vel = {vd};
  s.evader_pos = {ue};
  s.evader_vel = {ve};
  return s;
}

const KernelSet kDefaults = KernelSet::defaults();

}  // namespace

TEST_CASE("barycenter and gathering radius") {
  SystemState s;
  s.driver_pos = {Vec2(5, 5)};
  s.driver_vel = {Vec2::Zero()};

  s.evader_pos = {Vec2(0, 0)};
  s.evader_vel.assign(1, Vec2::Zero());
  CHECK(barycenter(s) == Vec2(0, 0));
  CHECK(gathering_radius(s) == 0.0);

  s.evader_pos = {Vec2(0, 0), Vec2(2, 0)};
  s.evader_vel.assign(2, Vec2::Zero());
  CHECK(barycenter(s) == Vec2(1, 0));
  CHECK(gathering_radius(s) == doctest::Approx(1.0));

  s.evader_pos = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)};
  s.evader_vel.assign(4, Vec2::Zero());
  CHECK(barycenter(s) == Vec2(0.5, 0.5));
  CHECK(gathering_radius(s) == doctest::Approx(std::sqrt(2.0) / 2.0));
}

TEST_CASE("perp algebra") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 u(dist(rng), dist(rng));
    CHECK(u.dot(perp(u)) == 0.0);
    CHECK(perp(u).norm() == doctest::Approx(u.norm()).epsilon(1e-15));
    CHECK((perp(perp(u)) + u).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("rhs_general hand-evaluated single pair") {
  const FrictionParams nu = FrictionParams::uniform(1, 1, 2.0);
  const SystemState s = pair_state(Vec2(-1, 0), Vec2(0, 0));

  // |u| = 1 so f_d = f_e = 1: pursuit pulls the driver toward the evader,
  // repulsion pushes the evader away.
  auto d = rhs_general(s, {{1.0, 0.0}}, kDefaults, nu);
  CHECK(d.driver_acc[0].x() == doctest::Approx(1.0));
  CHECK(d.driver_acc[0].y() == doctest::Approx(0.0));
  CHECK(d.evader_acc[0].x() == doctest::Approx(1.0));
  CHECK(d.evader_acc[0].y() == doctest::Approx(0.0));

  d = rhs_general(s, {{0.0, 0.0}}, kDefaults, nu);
  CHECK(d.driver_acc[0].norm() == doctest::Approx(0.0));
  CHECK(d.evader_acc[0].x() == doctest::Approx(1.0));

  d = rhs_general(s, {{0.0, 1.0}}, kDefaults, nu);
  CHECK(d.driver_acc[0].x() == doctest::Approx(0.0));
  CHECK(d.driver_acc[0].y() == doctest::Approx(-1.0));  // (u_d - u_ec)^perp = (0,-1)
  CHECK(d.evader_acc[0].x() == doctest::Approx(1.0));
}

TEST_CASE("rhs_general singularity carries the pair indices") {
  const FrictionParams nu = FrictionParams::uniform(1, 2, 2.0);
  SystemState s;
  s.driver_pos = {Vec2(0.5, 0.5)};
  s.driver_vel = {Vec2::Zero()};
  s.evader_pos = {Vec2(3, 3), Vec2(0.5, 0.5)};
  s.evader_vel = {Vec2::Zero(), Vec2::Zero()};
  try {
    rhs_general(s, {{1.0, 0.0}}, kDefaults, nu);
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    CHECK(e.driver_index == 0);
    CHECK(e.evader_index == 1);
  }
}

TEST_CASE("rhs_relative hand values") {
  auto [du, dv] = rhs_relative(Vec2(1, 0), Vec2::Zero(), 1.0, 0.0, kDefaults, 2.0);
  CHECK(du.norm() == 0.0);
  CHECK(dv.norm() == doctest::Approx(0.0));  // equilibrium at r_p

  std::tie(du, dv) = rhs_relative(Vec2(2, 0), Vec2::Zero(), 1.0, 0.0, kDefaults, 2.0);
  CHECK(dv.x() == doctest::Approx(-1.5));
  CHECK(dv.y() == doctest::Approx(0.0));

  std::tie(du, dv) = rhs_relative(Vec2(1, 0), Vec2::Zero(), 1.0, 1.0, kDefaults, 2.0);
  CHECK(dv.x() == doctest::Approx(0.0));
  CHECK(dv.y() == doctest::Approx(1.0));

  CHECK_THROWS_AS(rhs_relative(Vec2(0, 0), Vec2(1, 0), 1.0, 0.0, kDefaults, 2.0),
                  SingularityError);
}

TEST_CASE("release mode matches the closed-form linear decay") {
  const FrictionParams nu = FrictionParams::uniform(1, 1, 2.0);
  SystemState s = pair_state(Vec2(0, 0), Vec2(100, 0), Vec2(1, 0));
  ConstantSchedule zero;
  zero.values = {{0.0, 0.0}};
  const Trajectory traj = integrate(s, ControlSchedule{zero}, kDefaults, nu, 1.0, 1000);
  // v_d(t) = e^{-2t} (1,0), u_d(t) = ((1 - e^{-2t})/2, 0)
  const Vec2 v_end = traj.back().driver_vel[0];
  const Vec2 u_end = traj.back().driver_pos[0];
  CHECK(std::abs(v_end.x() - std::exp(-2.0)) < 1e-8);
  CHECK(std::abs(v_end.y()) < 1e-12);
  CHECK(std::abs(u_end.x() - 0.5 * (1.0 - std::exp(-2.0))) < 1e-8);
}

TEST_CASE("far-apart pair barely drifts") {
  // The repulsion force magnitude is r f_e(r) = 1/r for the default kernels,
  // so "nearly constant" needs a separation much larger than the horizon.
  const FrictionParams nu = FrictionParams::uniform(1, 1, 2.0);
  SystemState s = pair_state(Vec2(0, 0), Vec2(1e6, 0));
  ConstantSchedule zero;
  zero.values = {{0.0, 0.0}};
  const Trajectory traj = integrate(s, ControlSchedule{zero}, kDefaults, nu, 1.0, 1000);
  CHECK((traj.back().evader_pos[0] - Vec2(1e6, 0)).norm() < 1e-6);
  CHECK(traj.back().driver_pos[0].norm() < 1e-6);
}

TEST_CASE("translation equivariance") {
  const FrictionParams nu = FrictionParams::uniform(1, 2, 2.0);
  SystemState s;
  s.driver_pos = {Vec2(-2, 0.5)};
  s.driver_vel = {Vec2(0.1, -0.2)};
  s.evader_pos = {Vec2(0, 0), Vec2(0.4, 0.3)};
  s.evader_vel = {Vec2(0, 0.1), Vec2(-0.1, 0)};
  ConstantSchedule c;
  c.values = {{1.0, 0.7}};
  const Trajectory base = integrate(s, ControlSchedule{c}, kDefaults, nu, 5.0, 500);

  const Vec2 shift(3.25, -1.5);
  SystemState moved = s;
  for (Vec2& u : moved.driver_pos) u += shift;
  for (Vec2& u : moved.evader_pos) u += shift;
  const Trajectory shifted = integrate(moved, ControlSchedule{c}, kDefaults, nu, 5.0, 500);

  double max_dev = 0.0;
  for (int k = 0; k <= base.steps(); ++k) {
    max_dev = std::max(max_dev,
                       (shifted.states[k].driver_pos[0] - base.states[k].driver_pos[0] - shift).norm());
    for (int i = 0; i < 2; ++i)
      max_dev = std::max(
          max_dev, (shifted.states[k].evader_pos[i] - base.states[k].evader_pos[i] - shift).norm());
  }
  CHECK(max_dev < 1e-9);
}

TEST_CASE("mirror equivariance") {
  const FrictionParams nu = FrictionParams::uniform(1, 1, 2.0);
  SystemState s = pair_state(Vec2(-3, 0.5), Vec2(0, 0.2), Vec2(0.1, 0.3), Vec2(0, -0.1));
  ConstantSchedule c;
  c.values = {{1.0, 1.2}};
  const Trajectory base = integrate(s, ControlSchedule{c}, kDefaults, nu, 5.0, 500);

  auto flip = [](Vec2 v) { return Vec2(v.x(), -v.y()); };
  SystemState mirrored = s;
  mirrored.driver_pos[0] = flip(s.driver_pos[0]);
  mirrored.driver_vel[0] = flip(s.driver_vel[0]);
  mirrored.evader_pos[0] = flip(s.evader_pos[0]);
  mirrored.evader_vel[0] = flip(s.evader_vel[0]);
  ConstantSchedule neg;
  neg.values = {{1.0, -1.2}};
  const Trajectory mt = integrate(mirrored, ControlSchedule{neg}, kDefaults, nu, 5.0, 500);

  double max_dev = 0.0;
  for (int k = 0; k <= base.steps(); ++k) {
    max_dev = std::max(max_dev, (mt.states[k].driver_pos[0] - flip(base.states[k].driver_pos[0])).norm());
    max_dev = std::max(max_dev, (mt.states[k].evader_pos[0] - flip(base.states[k].evader_pos[0])).norm());
  }
  CHECK(max_dev < 1e-9);
}

TEST_CASE("general system matches the relative equation for one pair") {
  const double nu = 2.0;
  const FrictionParams fr = FrictionParams::uniform(1, 1, nu);
  const SystemState s = pair_state(Vec2(-3, 0), Vec2(0, 0), Vec2(0, 0.2), Vec2(0.1, 0));
  ConstantSchedule c;
  c.values = {{1.0, 0.8}};
  const Trajectory general = integrate(s, ControlSchedule{c}, kDefaults, fr, 10.0, 1000);
  const RelativeTrajectory rel = integrate_relative(
      s.driver_pos[0] - s.evader_pos[0], s.driver_vel[0] - s.evader_vel[0], ControlSchedule{c},
      kDefaults, nu, 10.0, 1000);
  double max_dev = 0.0;
  for (int k = 0; k <= general.steps(); ++k) {
    const Vec2 u = general.states[k].driver_pos[0] - general.states[k].evader_pos[0];
    max_dev = std::max(max_dev, (u - rel.u[k]).norm());
  }
  CHECK(max_dev < 1e-8);
}

TEST_CASE("integrator is fourth order under step halving") {
  const FrictionParams nu = FrictionParams::uniform(1, 1, 2.0);
  const SystemState s = pair_state(Vec2(-2, 0.3), Vec2(0, 0), Vec2(0, 0.1), Vec2::Zero());
  ConstantSchedule c;
  c.values = {{1.0, 0.9}};
  const double tf = 2.0;
  auto end_state = [&](int steps) {
    return pack_state(integrate(s, ControlSchedule{c}, kDefaults, nu, tf, steps).back());
  };
  const Eigen::VectorXd ref = end_state(16000);
  const double e1 = (end_state(250) - ref).norm();
  const double e2 = (end_state(500) - ref).norm();
  const double e4 = (end_state(1000) - ref).norm();
  const double order1 = std::log2(e1 / e2);
  const double order2 = std::log2(e2 / e4);
  CHECK(order1 > 3.5);
  CHECK(order1 < 4.5);
  CHECK(order2 > 3.5);
  CHECK(order2 < 4.5);
}

TEST_CASE("pursuit-mode rotational component decays like e^{-nu t}") {
  const double nu = 2.0;
  const FrictionParams fr = FrictionParams::uniform(1, 1, nu);
  const SystemState s = pair_state(Vec2(-1.5, 0), Vec2(0, 0), Vec2(0, 0.5), Vec2::Zero());
  ConstantSchedule c;
  c.values = {{1.0, 0.0}};
  const Trajectory traj = integrate(s, ControlSchedule{c}, kDefaults, fr, 3.0, 3000);
  const RelativeState r0 = relative_state(traj.front());
  const double m0 = perp(r0.u).dot(r0.v);
  for (int k = 0; k <= traj.steps(); k += 300) {
    const RelativeState r = relative_state(traj.states[k]);
    const double expected = m0 * std::exp(-nu * traj.time_at(k));
    CHECK(std::abs(perp(r.u).dot(r.v) - expected) <= 0.01 * std::abs(m0));
  }
}

TEST_CASE("rotational demo: winding of the circumvention mode") {
  // One driver, five flocked evaders, kappa^c = 1: the pair rotates with
  // angular velocity kappa^c / nu = 0.5 once the transient has died out.
  const FrictionParams nu = FrictionParams::uniform(1, 5, 2.0);
  SystemState s;
  s.driver_pos = {Vec2(-3, 0)};
  s.driver_vel = {Vec2::Zero()};
  s.evader_pos = {Vec2(0, 0), Vec2(0.2, 0), Vec2(0, 0.2), Vec2(-0.2, 0), Vec2(0, -0.2)};
  s.evader_vel.assign(5, Vec2::Zero());
  ConstantSchedule c;
  c.values = {{1.0, 1.0}};
  const Trajectory traj = integrate(s, ControlSchedule{c}, kDefaults, nu, 15.0, 1500);
  const double wind = winding_angle(traj, 500, 1500);  // t in [5, 15]
  CHECK(wind > 0.0);
  CHECK(wind == doctest::Approx(5.0).epsilon(0.15));
}

TEST_CASE("flat packing round-trip and flat rhs consistency") {
  const FrictionParams nu = FrictionParams::uniform(2, 3, 2.0);
  SystemState s;
  s.driver_pos = {Vec2(-2, 0), Vec2(-2, 1)};
  s.driver_vel = {Vec2(0.1, 0), Vec2(0, -0.1)};
  s.evader_pos = {Vec2(0, 0), Vec2(0.5, 0.2), Vec2(-0.3, 0.4)};
  s.evader_vel = {Vec2(0, 0.2), Vec2(0.1, 0), Vec2(0, 0)};
  const Eigen::VectorXd x = pack_state(s);
  const SystemState back = unpack_state(x, 2, 3);
  CHECK((pack_state(back) - x).norm() == 0.0);

  const std::vector<DriverControl> ctrl = {{1.0, 0.5}, {0.7, -0.3}};
  const Derivative d = rhs_general(s, ctrl, kDefaults, nu);
  const Eigen::VectorXd f = rhs_flat(x, ctrl, 2, 3, kDefaults, nu);
  for (int j = 0; j < 2; ++j) {
    CHECK((f.segment<2>(2 * j) - d.driver_vel[j]).norm() == 0.0);
    CHECK((f.segment<2>(10 + 2 * j) - d.driver_acc[j]).norm() == 0.0);
  }
  for (int i = 0; i < 3; ++i) {
    CHECK((f.segment<2>(4 + 2 * i) - d.evader_vel[i]).norm() == 0.0);
    CHECK((f.segment<2>(14 + 2 * i) - d.evader_acc[i]).norm() == 0.0);
  }
}

TEST_CASE("analytic rhs jacobian matches finite differences") {
  const FrictionParams nu = FrictionParams::uniform(2, 2, 1.7);
  SystemState s;
  s.driver_pos = {Vec2(-2, 0.3), Vec2(-1.5, -0.8)};
  s.driver_vel = {Vec2(0.1, 0.2), Vec2(-0.2, 0)};
  s.evader_pos = {Vec2(0, 0), Vec2(0.5, 0.4)};
  s.evader_vel = {Vec2(0.05, 0), Vec2(0, -0.05)};
  const std::vector<DriverControl> ctrl = {{0.8, 0.5}, {1.0, -0.4}};
  const Eigen::VectorXd x = pack_state(s);
  const Eigen::MatrixXd J = rhs_jacobian(x, ctrl, 2, 2, kDefaults, nu);
  const double eps = 1e-7;
  for (int col = 0; col < x.size(); ++col) {
    Eigen::VectorXd xp = x, xm = x;
    xp[col] += eps;
    xm[col] -= eps;
    const Eigen::VectorXd fd =
        (rhs_flat(xp, ctrl, 2, 2, kDefaults, nu) - rhs_flat(xm, ctrl, 2, 2, kDefaults, nu)) /
        (2.0 * eps);
    CHECK((J.col(col) - fd).lpNorm<Eigen::Infinity>() < 1e-6);
  }
  // control derivatives
  for (int j = 0; j < 2; ++j) {
    auto ctrl_p = ctrl, ctrl_m = ctrl;
    ctrl_p[j].kc += eps;
    ctrl_m[j].kc -= eps;
    const Eigen::VectorXd fd =
        (rhs_flat(x, ctrl_p, 2, 2, kDefaults, nu) - rhs_flat(x, ctrl_m, 2, 2, kDefaults, nu)) /
        (2.0 * eps);
    CHECK((rhs_dkc(x, j, 2, 2) - fd).lpNorm<Eigen::Infinity>() < 1e-6);
    ctrl_p = ctrl;
    ctrl_m = ctrl;
    ctrl_p[j].kp += eps;
    ctrl_m[j].kp -= eps;
    const Eigen::VectorXd fdp =
        (rhs_flat(x, ctrl_p, 2, 2, kDefaults, nu) - rhs_flat(x, ctrl_m, 2, 2, kDefaults, nu)) /
        (2.0 * eps);
    CHECK((rhs_dkp(x, j, 2, 2, kDefaults) - fdp).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("psi_e sign convention flips the evader-evader term") {
  const FrictionParams nu = FrictionParams::uniform(1, 2, 2.0);
  SystemState s;
  s.driver_pos = {Vec2(-50, 0)};  // far away: f_e negligible
  s.driver_vel = {Vec2::Zero()};
  s.evader_pos = {Vec2(0, 0), Vec2(1, 0)};
  s.evader_vel = {Vec2::Zero(), Vec2::Zero()};
  DynamicsOptions attract;  // default: attractive at range
  const Derivative da = rhs_general(s, {{0.0, 0.0}}, kDefaults, nu, attract);
  // psi_e(1) > 0 and the separation exceeds the 0.1 length scale:
  // evader 0 is pulled toward evader 1.
  CHECK(da.evader_acc[0].x() > 0.0);
  DynamicsOptions paper_sign;
  paper_sign.psi_e_sign = -1.0;
  const Derivative dp = rhs_general(s, {{0.0, 0.0}}, kDefaults, nu, paper_sign);
  CHECK(dp.evader_acc[0].x() < 0.0);
  // The difference isolates the flocking term: 2 * (1/N) psi_e(1) * 1.
  const double psi_term = 0.5 * (da.evader_acc[0] - dp.evader_acc[0]).x();
  CHECK(psi_term == doctest::Approx(0.5 * kDefaults.psi_e(1.0)).epsilon(1e-12));
}

TEST_CASE("unequal friction accepted by the integrator") {
  FrictionParams fr;
  fr.nu_d = Eigen::VectorXd::Constant(1, 2.0);
  fr.nu_e = Eigen::VectorXd::Constant(1, 3.0);
  CHECK_FALSE(fr.equal_friction());
  const SystemState s = pair_state(Vec2(-2, 0), Vec2(0, 0));
  ConstantSchedule c;
  c.values = {{1.0, 0.0}};
  CHECK_NOTHROW(integrate(s, ControlSchedule{c}, kDefaults, fr, 1.0, 100));

  FrictionParams bad;
  bad.nu_d = Eigen::VectorXd::Constant(1, -1.0);
  bad.nu_e = Eigen::VectorXd::Constant(1, 2.0);
  CHECK_THROWS_AS(integrate(s, ControlSchedule{c}, kDefaults, bad, 1.0, 100),
                  std::invalid_argument);
}
