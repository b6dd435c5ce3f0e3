#pragma once

#include <vector>

#include "gbr/controls.hpp"
#include "gbr/state.hpp"

namespace gbr {

/// Uniformly sampled states and controls over [0, t_f]; the exchange object
/// between simulation, diagnostics, cost evaluation and the adjoint solver.
struct Trajectory {
  double t_f = 0.0;
  std::vector<SystemState> states;                  // n_steps + 1 entries
  std::vector<std::vector<DriverControl>> controls; // same grid, per driver

  int steps() const { return static_cast<int>(states.size()) - 1; }
  int drivers() const { return states.empty() ? 0 : states.front().drivers(); }
  int evaders() const { return states.empty() ? 0 : states.front().evaders(); }
  double dt() const { return steps() > 0 ? t_f / steps() : 0.0; }
  double time_at(int k) const { return steps() > 0 ? t_f * k / steps() : 0.0; }

  const SystemState& front() const { return states.front(); }
  const SystemState& back() const { return states.back(); }
};

}  // namespace gbr
