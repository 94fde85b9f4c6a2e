#include "cortexforge/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "cortexforge/geometry.hpp"

namespace cortexforge {

namespace {
constexpr int kLeafSize = 4;
// Clusters farther than this multiple of their radius use the dipole term.
constexpr double kFarRatio = 2.5;
}  // namespace

TriangleBvh::TriangleBvh(std::span<const Vec3> vertices, std::span<const Triangle> triangles, bool with_moments)
    : moments_(with_moments) {
  corners_.reserve(triangles.size());
  boxes_.reserve(triangles.size());
  for (const Triangle& t : triangles) {
    corners_.push_back({vertices[t[0]], vertices[t[1]], vertices[t[2]]});
    Aabb b;
    for (const Vec3& c : corners_.back()) b.expand(c);
    boxes_.push_back(b);
    centers_.push_back(b.center());
  }
  order_.resize(triangles.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / kLeafSize + 2);
    build(0, static_cast<int>(order_.size()));
  }
}

int TriangleBvh::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centers;
  Vec3 normal_sum = Vec3::Zero();
  Vec3 weighted = Vec3::Zero();
  double area_sum = 0.0;
  for (int i = begin; i < end; ++i) {
    const int t = order_[i];
    box.expand(boxes_[t]);
    centers.expand(centers_[t]);
    if (!moments_) continue;
    const auto& c = corners_[t];
    const Vec3 cross = (c[1] - c[0]).cross(c[2] - c[0]);
    const double area = 0.5 * cross.norm();
    normal_sum += 0.5 * cross;
    weighted += area * (c[0] + c[1] + c[2]) / 3.0;
    area_sum += area;
  }
  Vec3 centroid = area_sum > 0.0 ? Vec3(weighted / area_sum) : box.center();
  double radius = 0.0;
  for (int i = begin; i < end && moments_; ++i) {
    for (const Vec3& c : corners_[order_[i]]) radius = std::max(radius, (c - centroid).norm());
  }
  {
    Node& n = nodes_[id];
    n.box = box;
    n.begin = begin;
    n.end = end;
    n.area_normal = normal_sum;
    n.centroid = centroid;
    n.radius = radius;
  }
  if (end - begin <= kLeafSize) return id;

  const Vec3 extent = centers.hi - centers.lo;
  int axis = 0;
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = centers_[a][axis];
                     const double cb = centers_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

TriangleBvh::Closest TriangleBvh::closest(const Vec3& p) const {
  Closest best;
  best.distance = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;
  double best_sq = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  stack.reserve(64);
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& n = nodes_[id];
    if (n.box.squared_distance(p) > best_sq) continue;
    if (n.leaf()) {
      for (int i = n.begin; i < n.end; ++i) {
        const int t = order_[i];
        const auto& c = corners_[t];
        const Vec3 q = geom::closest_point_on_triangle(p, c[0], c[1], c[2]);
        const double d = (q - p).squaredNorm();
        if (d < best_sq || (d == best_sq && t < best.triangle)) {
          best_sq = d;
          best.triangle = t;
          best.point = q;
        }
      }
      continue;
    }
    const double dl = nodes_[n.left].box.squared_distance(p);
    const double dr = nodes_[n.right].box.squared_distance(p);
    // Push the farther child first so the nearer one is explored first.
    if (dl < dr) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

double TriangleBvh::winding_node(int id, const Vec3& p) const {
  const Node& n = nodes_[id];
  const Vec3 r = n.centroid - p;
  const double dist = r.norm();
  if (dist > kFarRatio * n.radius && dist > 0.0) {
    return n.area_normal.dot(r) / (4.0 * std::numbers::pi * dist * dist * dist);
  }
  if (n.leaf()) {
    double w = 0.0;
    for (int i = n.begin; i < n.end; ++i) {
      const auto& c = corners_[order_[i]];
      w += geom::solid_angle(p, c[0], c[1], c[2]);
    }
    return w / (4.0 * std::numbers::pi);
  }
  return winding_node(n.left, p) + winding_node(n.right, p);
}

double TriangleBvh::winding_number(const Vec3& p) const {
  if (nodes_.empty()) return 0.0;
  if (!moments_) return winding_number_exact(p);
  const double w = winding_node(0, p);
  if (std::abs(w - 0.5) < 0.3) return winding_number_exact(p);
  return w;
}

double TriangleBvh::winding_number_exact(const Vec3& p) const {
  double w = 0.0;
  for (const auto& c : corners_) w += geom::solid_angle(p, c[0], c[1], c[2]);
  return w / (4.0 * std::numbers::pi);
}

void TriangleBvh::for_each_overlapping_pair(const std::function<void(int, int)>& fn) const {
  if (nodes_.empty()) return;
  self_pairs(0, 0, fn);
}

void TriangleBvh::self_pairs(int a, int b, const std::function<void(int, int)>& fn) const {
  const Node& na = nodes_[a];
  const Node& nb = nodes_[b];
  if (!na.box.overlaps(nb.box)) return;
  if (a == b) {
    if (na.leaf()) {
      for (int i = na.begin; i < na.end; ++i)
        for (int j = i + 1; j < na.end; ++j) {
          const int ti = order_[i], tj = order_[j];
          if (boxes_[ti].overlaps(boxes_[tj])) fn(std::min(ti, tj), std::max(ti, tj));
        }
      return;
    }
    self_pairs(na.left, na.left, fn);
    self_pairs(na.right, na.right, fn);
    self_pairs(na.left, na.right, fn);
    return;
  }
  if (na.leaf() && nb.leaf()) {
    for (int i = na.begin; i < na.end; ++i)
      for (int j = nb.begin; j < nb.end; ++j) {
        const int ti = order_[i], tj = order_[j];
        if (boxes_[ti].overlaps(boxes_[tj])) fn(std::min(ti, tj), std::max(ti, tj));
      }
    return;
  }
  const bool split_a = nb.leaf() || (!na.leaf() && (na.end - na.begin) >= (nb.end - nb.begin));
  if (split_a) {
    self_pairs(na.left, b, fn);
    self_pairs(na.right, b, fn);
  } else {
    self_pairs(a, nb.left, fn);
    self_pairs(a, nb.right, fn);
  }
}

}  // namespace cortexforge
