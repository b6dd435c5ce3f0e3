#pragma once

#include <vector>

#include "gbr/vec.hpp"

namespace gbr {

/// Positions and velocities of M drivers and N evaders at one time instant.
struct SystemState {
  double t = 0.0;
  std::vector<Vec2> driver_pos;
  std::vector<Vec2> driver_vel;
  std::vector<Vec2> evader_pos;
  std::vector<Vec2> evader_vel;

  int drivers() const { return static_cast<int>(driver_pos.size()); }
  int evaders() const { return static_cast<int>(evader_pos.size()); }

  /// Throws std::invalid_argument on M < 1, N < 1, mismatched sizes or
  /// non-finite coordinates.
  void require_valid() const;
};

/// Mean of the evader positions (the point every driver pursues).
Vec2 barycenter(const SystemState& state);

/// Max distance from any evader to the evader barycenter.
double gathering_radius(const SystemState& state);

/// Per-agent friction coefficients.
struct FrictionParams {
  Eigen::VectorXd nu_d;
  Eigen::VectorXd nu_e;

  static FrictionParams uniform(int drivers, int evaders, double nu);

  /// True iff every coefficient equals every other; gates the diagnostics
  /// that rely on the closed relative equation.
  bool equal_friction() const;
  /// The common value; only meaningful when equal_friction().
  double common_nu() const { return nu_d.size() > 0 ? nu_d[0] : nu_e[0]; }

  void require_valid(int drivers, int evaders) const;
};

}  // namespace gbr
