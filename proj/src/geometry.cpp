#include "cortexforge/geometry.hpp"

#include <array>
#include <cmath>

#include <Eigen/Geometry>

namespace cortexforge::geom {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + ab * v + ac * w;
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  return (p - closest_point_on_triangle(p, a, b, c)).norm();
}

double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Van Oosterom and Strackee.
  const Vec3 u = a - p;
  const Vec3 v = b - p;
  const Vec3 w = c - p;
  const double lu = u.norm(), lv = v.norm(), lw = w.norm();
  const double num = u.dot(v.cross(w));
  const double den = lu * lv * lw + u.dot(v) * lw + v.dot(w) * lu + w.dot(u) * lv;
  return 2.0 * std::atan2(num, den);
}

double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a));
}

namespace {

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

// 2D helpers for the coplanar case.
using P2 = Eigen::Vector2d;

double orient2d(const P2& a, const P2& b, const P2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool on_segment_2d(const P2& a, const P2& b, const P2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect_2d(const P2& a, const P2& b, const P2& c, const P2& d) {
  const int o1 = sign_of(orient2d(a, b, c));
  const int o2 = sign_of(orient2d(a, b, d));
  const int o3 = sign_of(orient2d(c, d, a));
  const int o4 = sign_of(orient2d(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment_2d(a, b, c)) return true;
  if (o2 == 0 && on_segment_2d(a, b, d)) return true;
  if (o3 == 0 && on_segment_2d(c, d, a)) return true;
  if (o4 == 0 && on_segment_2d(c, d, b)) return true;
  return false;
}

bool point_in_triangle_2d(const P2& p, const P2& a, const P2& b, const P2& c) {
  const int s1 = sign_of(orient2d(a, b, p));
  const int s2 = sign_of(orient2d(b, c, p));
  const int s3 = sign_of(orient2d(c, a, p));
  const bool has_neg = s1 < 0 || s2 < 0 || s3 < 0;
  const bool has_pos = s1 > 0 || s2 > 0 || s3 > 0;
  return !(has_neg && has_pos);
}

bool coplanar_intersect(const std::array<Vec3, 3>& t, const std::array<Vec3, 3>& s) {
  const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]);
  int drop = 0;
  const Vec3 an = n.cwiseAbs();
  if (an.y() > an[drop]) drop = 1;
  if (an.z() > an[drop]) drop = 2;
  const int ax = drop == 0 ? 1 : 0;
  const int ay = drop == 2 ? 1 : 2;
  std::array<P2, 3> a, b;
  for (int i = 0; i < 3; ++i) {
    a[i] = P2(t[i][ax], t[i][ay]);
    b[i] = P2(s[i][ax], s[i][ay]);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (segments_intersect_2d(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3])) return true;
  // Containment only matters for triangles with area; segment and point
  // stand-ins are fully handled by the edge tests above.
  const bool a_area = orient2d(a[0], a[1], a[2]) != 0.0;
  const bool b_area = orient2d(b[0], b[1], b[2]) != 0.0;
  return (b_area && point_in_triangle_2d(a[0], b[0], b[1], b[2])) ||
         (a_area && point_in_triangle_2d(b[0], a[0], a[1], a[2]));
}

// Closed segment pq against closed triangle abc, for p, q not both in the plane.
bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const int sp = sign_of(orient3d(a, b, c, p));
  const int sq = sign_of(orient3d(a, b, c, q));
  if (sp == sq) return false;  // same side, or both in-plane (handled by caller)
  const int s1 = sign_of(orient3d(p, q, a, b));
  const int s2 = sign_of(orient3d(p, q, b, c));
  const int s3 = sign_of(orient3d(p, q, c, a));
  const bool has_neg = s1 < 0 || s2 < 0 || s3 < 0;
  const bool has_pos = s1 > 0 || s2 > 0 || s3 > 0;
  return !(has_neg && has_pos);
}

}  // namespace

bool triangles_intersect(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& q0,
                         const Vec3& q1, const Vec3& q2) {
  const int a0 = sign_of(orient3d(p0, p1, p2, q0));
  const int a1 = sign_of(orient3d(p0, p1, p2, q1));
  const int a2 = sign_of(orient3d(p0, p1, p2, q2));
  if (a0 == a1 && a1 == a2 && a0 != 0) return false;
  const int b0 = sign_of(orient3d(q0, q1, q2, p0));
  const int b1 = sign_of(orient3d(q0, q1, q2, p1));
  const int b2 = sign_of(orient3d(q0, q1, q2, p2));
  if (b0 == b1 && b1 == b2 && b0 != 0) return false;

  if (a0 == 0 && a1 == 0 && a2 == 0) return coplanar_intersect({p0, p1, p2}, {q0, q1, q2});

  // Non-coplanar: the intersection segment ends on an edge of one triangle
  // lying inside the other.
  const std::array<Vec3, 3> P{p0, p1, p2};
  const std::array<Vec3, 3> Q{q0, q1, q2};
  for (int i = 0; i < 3; ++i) {
    if (segment_hits_triangle(Q[i], Q[(i + 1) % 3], p0, p1, p2)) return true;
    if (segment_hits_triangle(P[i], P[(i + 1) % 3], q0, q1, q2)) return true;
  }
  // An edge lying in the other triangle's plane: check it in 2D.
  const std::array<int, 3> as{a0, a1, a2};
  for (int i = 0; i < 3; ++i) {
    if (as[i] == 0 && as[(i + 1) % 3] == 0) {
      if (coplanar_intersect({p0, p1, p2}, {Q[i], Q[(i + 1) % 3], Q[(i + 1) % 3]})) return true;
    }
  }
  const std::array<int, 3> bs{b0, b1, b2};
  for (int i = 0; i < 3; ++i) {
    if (bs[i] == 0 && bs[(i + 1) % 3] == 0) {
      if (coplanar_intersect({q0, q1, q2}, {P[i], P[(i + 1) % 3], P[(i + 1) % 3]})) return true;
    }
  }
  // A single vertex touching the other triangle's interior.
  for (int i = 0; i < 3; ++i) {
    if (as[i] == 0 && coplanar_intersect({p0, p1, p2}, {Q[i], Q[i], Q[i]})) return true;
    if (bs[i] == 0 && coplanar_intersect({q0, q1, q2}, {P[i], P[i], P[i]})) return true;
  }
  return false;
}

}  // namespace cortexforge::geom
