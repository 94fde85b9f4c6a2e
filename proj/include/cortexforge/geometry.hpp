#pragma once

#include "cortexforge/types.hpp"

namespace cortexforge::geom {

/// Closest point to p on the closed triangle (a, b, c).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Signed solid angle subtended by triangle (a, b, c) at p. Positive when p
/// lies behind the triangle, i.e. inside a surface with outward winding.
double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Six times the signed volume of tetrahedron (a, b, c, d).
double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// True when the closed triangles share at least one point (touching counts).
bool triangles_intersect(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& q0,
                         const Vec3& q1, const Vec3& q2);

}  // namespace cortexforge::geom
