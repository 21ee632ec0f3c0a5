#pragma once

#include <cmath>

namespace stormgen {

/// Planar vector. Used for positions (meters) and velocities (meters per step).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
};

using Velocity = Vec2;

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

}  // namespace stormgen
