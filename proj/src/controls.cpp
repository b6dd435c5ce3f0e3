#include "gbr/controls.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbr/feedback.hpp"

namespace gbr {

void ControlBounds::require_valid() const {
  if (kp_min > kp_max || kc_min > kc_max)
    throw std::invalid_argument("control bounds: min must not exceed max");
}

void FeedbackParams::require_valid() const {
  if (kappa_bar_c <= 0.0) throw std::invalid_argument("feedback: kappa_bar_c must be positive");
  if (gather_off >= gather_on)
    throw std::invalid_argument("feedback: gather_off must be below gather_on");
}

double SampledSchedule::knot(int i) const {
  if (!knots.empty()) return knots[i];
  const int n = nodes() - 1;
  return n > 0 ? t_end * i / n : 0.0;
}

SampledSchedule SampledSchedule::uniform(int drivers, int nodes, double t_end, double kp_value,
                                         double kc_value) {
  SampledSchedule s;
  s.t_end = t_end;
  s.kp.assign(drivers, Eigen::VectorXd::Constant(nodes, kp_value));
  s.kc.assign(drivers, Eigen::VectorXd::Constant(nodes, kc_value));
  return s;
}

namespace {

// Linear interpolation of per-driver node values at time t.
double interp(const SampledSchedule& s, const Eigen::VectorXd& values, double t) {
  const int n = s.nodes();
  if (n == 1) return values[0];
  if (s.knots.empty()) {
    const double h = s.t_end / (n - 1);
    double pos = std::clamp(t / h, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(pos), n - 2);
    const double w = pos - i;
    return values[i] * (1.0 - w) + values[i + 1] * w;
  }
  if (t <= s.knots.front()) return values[0];
  if (t >= s.knots.back()) return values[n - 1];
  const auto it = std::upper_bound(s.knots.begin(), s.knots.end(), t);
  const int i = static_cast<int>(it - s.knots.begin()) - 1;
  const double span = s.knots[i + 1] - s.knots[i];
  const double w = span > 0.0 ? (t - s.knots[i]) / span : 0.0;
  return values[i] * (1.0 - w) + values[i + 1] * w;
}

}  // namespace

std::vector<DriverControl> sample(const ControlSchedule& schedule, double t,
                                  const ControlBounds& bounds, const SystemState* state) {
  std::vector<DriverControl> out;
  if (const auto* c = std::get_if<ConstantSchedule>(&schedule)) {
    out = c->values;
  } else if (const auto* o = std::get_if<OffBangOffSchedule>(&schedule)) {
    const bool on = t >= o->t1 && t <= o->t2;
    out.reserve(o->values.size());
    for (const DriverControl& v : o->values) out.push_back({v.kp, on ? v.kc : 0.0});
  } else if (const auto* s = std::get_if<SampledSchedule>(&schedule)) {
    out.reserve(s->drivers());
    for (int j = 0; j < s->drivers(); ++j)
      out.push_back({interp(*s, s->kp[j], t), interp(*s, s->kc[j], t)});
  } else if (const auto* f = std::get_if<FeedbackSchedule>(&schedule)) {
    if (state == nullptr)
      throw std::invalid_argument("sample: feedback schedule requires the current state");
    out.reserve(state->drivers());
    for (int j = 0; j < state->drivers(); ++j)
      out.push_back({bounds.kp_max, feedback_circumvention(*state, f->params, j)});
  }
  for (DriverControl& v : out) {
    v.kp = bounds.clamp_kp(v.kp);
    v.kc = bounds.clamp_kc(v.kc);
  }
  return out;
}

SampledSchedule project_bounds(const SampledSchedule& schedule, const ControlBounds& bounds) {
  SampledSchedule out = schedule;
  for (auto& v : out.kp) v = v.array().max(bounds.kp_min).min(bounds.kp_max);
  for (auto& v : out.kc) v = v.array().max(bounds.kc_min).min(bounds.kc_max);
  return out;
}

TimeScaling TimeScaling::uniform(double t_f, int segments) {
  TimeScaling s;
  s.t_f = t_f;
  s.speeds = Eigen::VectorXd::Constant(segments, t_f);
  return s;
}

void TimeScaling::normalize(double c_lo, double c_hi) {
  if (speeds.size() == 0) throw std::invalid_argument("time scaling: empty speed profile");
  if (c_hi > 0.0) speeds = speeds.array().max(c_lo).min(c_hi);
  const double mean = speeds.mean();
  if (mean <= 0.0) throw std::invalid_argument("time scaling: speeds must be positive");
  speeds *= t_f / mean;
}

double TimeScaling::map(double s) const {
  const int n = segments();
  const double hs = 1.0 / n;
  const double pos = std::clamp(s, 0.0, 1.0) / hs;
  const int i = std::min(static_cast<int>(pos), n - 1);
  double t = 0.0;
  for (int k = 0; k < i; ++k) t += speeds[k] * hs;
  return t + speeds[i] * (std::clamp(s, 0.0, 1.0) - i * hs);
}

double TimeScaling::inverse_map(double t) const {
  const int n = segments();
  const double hs = 1.0 / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double seg = speeds[i] * hs;
    if (t <= acc + seg || i == n - 1)
      return i * hs + (seg > 0.0 ? (t - acc) / speeds[i] : 0.0);
    acc += seg;
  }
  return 1.0;
}

SampledSchedule rescale_time(const SampledSchedule& schedule_in_s, const TimeScaling& scaling) {
  const int n = schedule_in_s.nodes();
  SampledSchedule out = schedule_in_s;
  out.t_end = scaling.t_f;
  out.knots.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    out.knots[i] = scaling.map(s);
  }
  out.knots.back() = scaling.t_f;  // kill cumulative round-off at the endpoint
  return out;
}

double control_effort(const SampledSchedule& schedule) {
  const int n = schedule.nodes();
  const int m = schedule.drivers();
  if (n < 2 || m == 0) return 0.0;
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const double dt = schedule.knot(i + 1) - schedule.knot(i);
      const double a = schedule.kc[j][i];
      const double b = schedule.kc[j][i + 1];
      // exact integral of the square of a linear segment
      total += dt * (a * a + a * b + b * b) / 3.0;
    }
  }
  return total / m;
}

}  // namespace gbr
