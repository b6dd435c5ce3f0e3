#pragma once

#include <Eigen/Dense>

namespace gbr {

using Vec2 = Eigen::Vector2d;

/// 90-degree counterclockwise rotation: (a,b) -> (-b,a).
inline Vec2 perp(const Vec2& u) { return Vec2(-u.y(), u.x()); }

/// Matrix of the perp operator, for Jacobian assembly.
inline Eigen::Matrix2d perp_matrix() {
  Eigen::Matrix2d r;
  r << 0.0, -1.0, 1.0, 0.0;
  return r;
}

}  // namespace gbr
