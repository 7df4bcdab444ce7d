#include "defgrid/geometry.hpp"

#include "defgrid/errors.hpp"

#include <algorithm>

namespace defgrid {

BarycentricCoords barycentric(Vec2 point, const Triangle& tri, std::size_t cell) {
  const Vec2 ab = tri[1] - tri[0];
  const Vec2 ac = tri[2] - tri[0];
  const double twice_area = cross(ab, ac);
  if (std::fabs(0.5 * twice_area) <= kDegenerateArea) {
    throw DegenerateCell(cell);
  }
  const Vec2 ap = point - tri[0];
  const double w_b = cross(ap, ac) / twice_area;
  const double w_c = cross(ab, ap) / twice_area;
  return {1.0 - w_b - w_c, w_b, w_c};
}

SegmentProjection project_onto_segment(Vec2 point, Vec2 start, Vec2 end) {
  SegmentProjection out;
  const Vec2 e = end - start;
  const double len2 = dot(e, e);
  if (len2 <= 0.0) {
    out.closest = start;
    out.t = 0.0;
    out.clamped = true;
  } else {
    const double raw = dot(point - start, e) / len2;
    out.t = std::clamp(raw, 0.0, 1.0);
    out.clamped = raw <= 0.0 || raw >= 1.0;
    out.closest = out.t == 0.0 ? start : (out.t == 1.0 ? end : start + out.t * e);
  }
  const Vec2 u = point - out.closest;
  out.l1 = std::fabs(u.x) + std::fabs(u.y);
  return out;
}

}  // namespace defgrid
