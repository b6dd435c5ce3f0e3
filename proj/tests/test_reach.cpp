#include <doctest.h>

#include <cmath>

#include "gbr/diagnostics.hpp"
#include "gbr/reach.hpp"

using namespace gbr;

namespace {
const KernelSet kDefaults = KernelSet::defaults();
const FrictionParams kNu2 = FrictionParams::uniform(1, 1, 2.0);

SystemState fig3_initial() {
  SystemState s;
  s.driver_pos = {Vec2(-3, 0)};
  s.driver_vel = {Vec2::Zero()};
  s.evader_pos = {Vec2(0, 0)};
  s.evader_vel = {Vec2::Zero()};
  return s;
}
}  // namespace

TEST_CASE("off-bang-off reach of (-1,1)") {
  ReachSpec spec;
  spec.target = Vec2(-1, 1);
  spec.kappa_c = 1.0;
  spec.t1 = 2.0;
  spec.tolerance = 0.05;
  const ReachResult r = reach_point(fig3_initial(), kDefaults, kNu2, ControlBounds{}, spec);
  CHECK(r.reached);
  CHECK(r.achieved_error < 0.05);
  CHECK(r.t2 > 8.75);
  CHECK(r.t2 < 9.75);
  CHECK(r.t_f > 12.0);
  CHECK(r.t_f < 14.0);
  CHECK(r.t1 == 2.0);
}

TEST_CASE("target ahead on the pursuit line needs no circumvention") {
  ReachSpec spec;
  spec.target = Vec2(5, 0);  // straight ahead of the escaping evader
  spec.kappa_c = 1.0;
  spec.t1 = 2.0;
  spec.tolerance = 0.05;
  spec.grid = 15;
  spec.refine_evals = 120;
  const ReachResult r = reach_point(fig3_initial(), kDefaults, kNu2, ControlBounds{}, spec);
  CHECK(r.reached);
  CHECK(r.achieved_error < 0.05);
}

TEST_CASE("target inside the stable orbit triggers the t1 retry loop") {
  // Locate the stable orbit of t1 = 2 by simulating the never-released
  // control, then aim exactly at its center.
  OffBangOffSchedule on;
  on.t1 = 2.0;
  on.t2 = 1e9;
  on.values = {{1.0, 1.0}};
  const Trajectory probe =
      integrate(fig3_initial(), ControlSchedule{on}, kDefaults, kNu2, 80.0, 8000);
  const auto [orbit, res] = fit_circumvention(probe, kDefaults, kNu2, 0.3);
  (void)res;

  ReachSpec spec;
  spec.target = orbit.center;
  spec.kappa_c = 1.0;
  spec.t1 = 2.0;
  spec.tolerance = 0.05;
  spec.grid = 15;
  spec.refine_evals = 120;

  SUBCASE("without retries the target is unreachable") {
    ReachSpec no_retry = spec;
    no_retry.t1_retries = 0;
    const ReachResult r = reach_point(fig3_initial(), kDefaults, kNu2, ControlBounds{}, no_retry);
    CHECK_FALSE(r.reached);
    CHECK(r.achieved_error > 0.05);  // honest failure report
  }
  SUBCASE("the retry loop shifts the orbit and reaches") {
    const ReachResult r = reach_point(fig3_initial(), kDefaults, kNu2, ControlBounds{}, spec);
    CHECK(r.reached);
    CHECK(r.t1 > 2.0);
  }
}

TEST_CASE("enlarging the box with a warm start never hurts") {
  ReachSpec small;
  small.target = Vec2(-1, 1);
  small.tolerance = 1e-4;  // force 'not reached' so we compare raw errors
  small.grid = 9;
  small.refine_evals = 40;
  small.box.t2_span = 10.0;
  small.box.dt_max = 6.0;
  small.t1_retries = 0;
  const ReachResult first = reach_point(fig3_initial(), kDefaults, kNu2, ControlBounds{}, small);

  ReachSpec big = small;
  big.box.t2_span = 14.0;
  big.box.dt_max = 10.0;
  big.warm_start = Eigen::Vector2d(first.t2, first.t_f);
  const ReachResult second = reach_point(fig3_initial(), kDefaults, kNu2, ControlBounds{}, big);
  CHECK(second.achieved_error <= first.achieved_error + 1e-12);
}

TEST_CASE("constant-control reach of (-1,1)") {
  ConstantReachSpec spec;
  spec.target = Vec2(-1, 1);
  const ConstantReachResult r =
      constant_control_reach(fig3_initial(), kDefaults, kNu2, ControlBounds{}, spec);
  CHECK(r.reached);
  CHECK(r.achieved_error < 0.05);
  // The true minimizer; its running cost matches the baseline figures
  // (7.07 over 8.56 time units) quoted for this comparison run.
  CHECK(r.kappa_c == doctest::Approx(0.9094).epsilon(0.02));
  CHECK(r.t_f == doctest::Approx(8.555).epsilon(0.02));
  CHECK(r.kappa_c * r.kappa_c * r.t_f == doctest::Approx(7.075).epsilon(0.02));
}

TEST_CASE("constant-control reach: aligned target and mirror symmetry") {
  ConstantReachSpec ahead;
  ahead.target = Vec2(6, 0);
  ahead.grid = 21;
  const ConstantReachResult r =
      constant_control_reach(fig3_initial(), kDefaults, kNu2, ControlBounds{}, ahead);
  CHECK(r.reached);
  CHECK(std::abs(r.kappa_c) < 0.05);

  ConstantReachSpec up, down;
  up.target = Vec2(-1, 1);
  down.target = Vec2(-1, -1);
  up.grid = down.grid = 15;
  const ConstantReachResult ru =
      constant_control_reach(fig3_initial(), kDefaults, kNu2, ControlBounds{}, up);
  const ConstantReachResult rd =
      constant_control_reach(fig3_initial(), kDefaults, kNu2, ControlBounds{}, down);
  CHECK(ru.kappa_c == doctest::Approx(-rd.kappa_c).epsilon(1e-6));
  CHECK(ru.t_f == doctest::Approx(rd.t_f).epsilon(1e-6));
}

TEST_CASE("waypoint chain") {
  SUBCASE("single waypoint equals reach_point") {
    ReachSpec spec;
    spec.target = Vec2(-1, 1);
    spec.grid = 15;
    spec.refine_evals = 100;
    const auto legs = reach_waypoints(fig3_initial(), kDefaults, kNu2, ControlBounds{},
                                      {Vec2(-1, 1)}, spec);
    REQUIRE(legs.size() == 1);
    CHECK(legs[0].reached);
  }
  SUBCASE("empty list yields an empty result") {
    ReachSpec spec;
    const auto legs =
        reach_waypoints(fig3_initial(), kDefaults, kNu2, ControlBounds{}, {}, spec);
    CHECK(legs.empty());
  }
}

TEST_CASE("six-waypoint tour" * doctest::skip(false)) {
  // Tour through the six reference waypoints with per-leg tolerance 0.2.
  ReachSpec spec;
  spec.tolerance = 0.2;
  spec.grid = 15;
  spec.refine_evals = 100;
  spec.t1 = 1.0;
  spec.t1_retries = 2;
  const std::vector<Vec2> targets = {Vec2(3, 3),   Vec2(4.5, 5), Vec2(6, 1),
                                     Vec2(9, 3),   Vec2(7.5, 5), Vec2(6, 7)};
  const auto legs =
      reach_waypoints(fig3_initial(), kDefaults, kNu2, ControlBounds{}, targets, spec);
  REQUIRE(legs.size() == targets.size());
  for (size_t i = 0; i < legs.size(); ++i) {
    CAPTURE(i);
    CHECK(legs[i].reached);
    CHECK(legs[i].achieved_error < 0.2);
  }
}
