#pragma once

#include <array>
#include <cmath>
#include <optional>

namespace defgrid {

/// Point or displacement in pixel units. Origin top-left, x right, y down.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

using Triangle = std::array<Vec2, 3>;

/// Triangles at or below this |signed area| (px^2) count as degenerate.
inline constexpr double kDegenerateArea = 1e-9;
/// Barycentric weights down to -kInsideTolerance still count as inside.
inline constexpr double kInsideTolerance = 1e-12;

struct BarycentricCoords {
  double w_a = 0.0;
  double w_b = 0.0;
  double w_c = 0.0;

  double min_weight() const { return std::fmin(w_a, std::fmin(w_b, w_c)); }
  bool inside() const { return min_weight() >= -kInsideTolerance; }
};

/// Shoelace area; positive when (a, b, c) turn clockwise on screen
/// (counter-clockwise in a y-up frame).
constexpr double signed_area(const Triangle& t) {
  return 0.5 * cross(t[1] - t[0], t[2] - t[0]);
}

/// Throws DegenerateCell(cell) when the triangle is degenerate.
BarycentricCoords barycentric(Vec2 point, const Triangle& tri, std::size_t cell = 0);

/// Closest-point data for a point against segment [start, end].
struct SegmentProjection {
  Vec2 closest;      // Euclidean-closest point on the segment
  double t = 0.0;    // closest = start + t * (end - start), t in [0,1]
  bool clamped = false;
  double l1 = 0.0;   // |point - closest|_1
};

SegmentProjection project_onto_segment(Vec2 point, Vec2 start, Vec2 end);

/// L1 norm of the displacement to the Euclidean-closest point on the segment.
inline double segment_l1_distance(Vec2 point, Vec2 start, Vec2 end) {
  return project_onto_segment(point, start, end).l1;
}

}  // namespace defgrid
