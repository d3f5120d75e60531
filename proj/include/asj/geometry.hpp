// Small 2-D and circular-angle helpers shared by all modules.
#pragma once

#include <algorithm>
#include <cmath>

namespace asj {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wrap an angle to [0, 2*pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Circular distance between two angles, in [0, pi].
inline double circ_dist(double a, double b) {
  double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

/// Direction of the ray p -> q in [0, 2*pi). The y axis points down
/// (raster convention), so theta = pi/2 is the downward direction.
inline double ray_angle(Vec2 p, Vec2 q) {
  return wrap_angle(std::atan2(q.y - p.y, q.x - p.x));
}

struct PixelCoord {
  int x = 0;
  int y = 0;
};

inline bool operator==(PixelCoord a, PixelCoord b) {
  return a.x == b.x && a.y == b.y;
}

}  // namespace asj
