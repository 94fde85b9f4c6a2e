#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cortexforge/types.hpp"

namespace cortexforge {

/// Axis-aligned bounding-box hierarchy over a triangle soup. Holds copies of
/// the triangle corners so queries stay valid after the source mesh goes away.
class TriangleBvh {
 public:
  /// Without moments the build is cheaper and winding numbers are always exact.
  TriangleBvh(std::span<const Vec3> vertices, std::span<const Triangle> triangles, bool with_moments = true);

  struct Closest {
    double distance = 0.0;
    int triangle = -1;
    Vec3 point = Vec3::Zero();
  };

  /// Exact nearest point on the surface.
  Closest closest(const Vec3& p) const;

  /// Generalized winding number. Far clusters use a dipole expansion; near
  /// clusters are summed exactly, and ambiguous results near 0.5 are redone
  /// with the exact sum over every triangle.
  double winding_number(const Vec3& p) const;
  double winding_number_exact(const Vec3& p) const;

  /// Calls fn(i, j), i < j, for every triangle pair whose boxes overlap.
  void for_each_overlapping_pair(const std::function<void(int, int)>& fn) const;

  std::size_t triangle_count() const { return corners_.size(); }
  const std::array<Vec3, 3>& corners(int t) const { return corners_[t]; }

 private:
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
    // Dipole data for the winding-number expansion.
    Vec3 area_normal = Vec3::Zero();
    Vec3 centroid = Vec3::Zero();
    double radius = 0.0;

    bool leaf() const { return left < 0; }
  };

  int build(int begin, int end);
  void self_pairs(int a, int b, const std::function<void(int, int)>& fn) const;
  double winding_node(int node, const Vec3& p) const;

  std::vector<std::array<Vec3, 3>> corners_;
  std::vector<Aabb> boxes_;
  std::vector<Vec3> centers_;
  std::vector<int> order_;
  bool moments_ = true;
  std::vector<Node> nodes_;
};

}  // namespace cortexforge
