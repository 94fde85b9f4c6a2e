#include <algorithm>
#include <numeric>
#include <tuple>

#include <Eigen/LU>

#include "cortexforge/error.hpp"
#include "cortexforge/mesh.hpp"

namespace cortexforge {

namespace {

struct Face {
  int voxel[3];
  int outside[3];                      // the background voxel across the face
  std::array<std::int64_t, 4> corner;  // lattice point ids, counter-clockwise from outside
};

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

TriangleMesh tessellate(const LabelVolume& mask) {
  require_binary(mask);
  const GridGeometry& g = mask.geometry();
  const Dims& n = g.dims();
  const std::int64_t lx = n[0] + 1, ly = n[1] + 1;
  auto lattice_id = [&](int i, int j, int k) { return i + lx * (j + ly * static_cast<std::int64_t>(k)); };
  auto inside = [&](int i, int j, int k) { return g.contains(i, j, k) && mask.at(i, j, k) != 0; };

  std::vector<Face> faces;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (!mask.at(i, j, k)) continue;
        for (int axis = 0; axis < 3; ++axis)
          for (int s : {-1, 1}) {
            int q[3] = {i, j, k};
            q[axis] += s;
            if (inside(q[0], q[1], q[2])) continue;
            const int u = (axis + 1) % 3;
            const int v = (axis + 2) % 3;
            static constexpr int pos[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            static constexpr int neg[4][2] = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
            const auto& offs = s > 0 ? pos : neg;
            Face f{{i, j, k}, {q[0], q[1], q[2]}, {}};
            for (int c = 0; c < 4; ++c) {
              int p[3] = {i, j, k};
              p[axis] += s > 0 ? 1 : 0;
              p[u] += offs[c][0];
              p[v] += offs[c][1];
              f.corner[c] = lattice_id(p[0], p[1], p[2]);
            }
            faces.push_back(f);
          }
      }
  if (faces.empty()) throw Error(ErrorCode::EmptyMask, "cannot tessellate an empty mask");

  // Pair faces across each lattice edge. Four faces meet only where two
  // foreground voxels touch along an edge alone; faces of the same voxel pair
  // up so the two sheets stay separate.
  struct EdgeUse {
    std::int64_t lo, hi;
    int face, local;
  };
  std::vector<EdgeUse> uses;
  uses.reserve(faces.size() * 4);
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    for (int e = 0; e < 4; ++e) {
      const std::int64_t a = faces[f].corner[e], b = faces[f].corner[(e + 1) % 4];
      uses.push_back({std::min(a, b), std::max(a, b), f, e});
    }
  }
  std::sort(uses.begin(), uses.end(), [](const EdgeUse& x, const EdgeUse& y) {
    return std::tie(x.lo, x.hi, x.face, x.local) < std::tie(y.lo, y.hi, y.face, y.local);
  });

  // Edge groups where four faces meet. Faces normally pair by voxel; a group
  // is switched to pairing by background voxel when the voxel pairing leaves
  // both sheets on the same pair of vertices.
  std::vector<std::size_t> group_start;
  for (std::size_t start = 0; start < uses.size();) {
    std::size_t end = start;
    while (end < uses.size() && uses[end].lo == uses[start].lo && uses[end].hi == uses[start].hi) ++end;
    if (end - start != 2 && end - start != 4) {
      throw Error(ErrorCode::Topology, "voxel surface has an edge with an odd face count");
    }
    group_start.push_back(start);
    start = end;
  }
  group_start.push_back(uses.size());
  std::vector<char> by_outside(group_start.size(), 0);

  auto same_voxel = [&](int a, int b) { return std::equal(faces[a].voxel, faces[a].voxel + 3, faces[b].voxel); };
  auto same_outside = [&](int a, int b) {
    return std::equal(faces[a].outside, faces[a].outside + 3, faces[b].outside);
  };

  std::vector<int> parent(faces.size() * 4);
  auto unite = [&](int a, int b) {
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  auto slot = [&](int face, std::int64_t point) {
    for (int c = 0; c < 4; ++c)
      if (faces[face].corner[c] == point) return face * 4 + c;
    return -1;
  };
  auto glue = [&](const EdgeUse& x, const EdgeUse& y) {
    // Join the corner slots of both faces at each shared lattice point.
    for (std::int64_t point : {x.lo, x.hi}) unite(slot(x.face, point), slot(y.face, point));
  };

  for (int pass = 0;; ++pass) {
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t gi = 0; gi + 1 < group_start.size(); ++gi) {
      const std::size_t start = group_start[gi], end = group_start[gi + 1];
      if (end - start == 2) {
        glue(uses[start], uses[start + 1]);
        continue;
      }
      for (std::size_t a = start; a < end; ++a)
        for (std::size_t b = a + 1; b < end; ++b) {
          const bool pair = by_outside[gi] ? same_outside(uses[a].face, uses[b].face)
                                           : same_voxel(uses[a].face, uses[b].face);
          if (pair) glue(uses[a], uses[b]);
        }
    }
    bool changed = false;
    for (std::size_t gi = 0; gi + 1 < group_start.size(); ++gi) {
      const std::size_t start = group_start[gi];
      if (group_start[gi + 1] - start != 4 || by_outside[gi]) continue;
      // One face from each sheet: the first face and one of another voxel.
      const EdgeUse& x = uses[start];
      std::size_t other = start + 1;
      while (same_voxel(x.face, uses[other].face)) ++other;
      const EdgeUse& y = uses[other];
      const bool lo_same = find_root(parent, slot(x.face, x.lo)) == find_root(parent, slot(y.face, y.lo));
      const bool hi_same = find_root(parent, slot(x.face, x.hi)) == find_root(parent, slot(y.face, y.hi));
      if (lo_same && hi_same) {
        by_outside[gi] = 1;
        changed = true;
      }
    }
    if (!changed) break;
    if (pass == 8) throw Error(ErrorCode::Topology, "could not separate the voxel surface into manifold sheets");
  }

  std::vector<int> vertex_of_root(parent.size(), -1);
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  triangles.reserve(faces.size() * 2);
  const bool mirrored = g.affine().topLeftCorner<3, 3>().determinant() < 0.0;
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    int id[4];
    for (int c = 0; c < 4; ++c) {
      const int root = find_root(parent, f * 4 + c);
      if (vertex_of_root[root] < 0) {
        const std::int64_t p = faces[f].corner[c];
        const double i = static_cast<double>(p % lx);
        const double j = static_cast<double>((p / lx) % ly);
        const double k = static_cast<double>(p / (lx * ly));
        vertex_of_root[root] = static_cast<int>(vertices.size());
        vertices.push_back(g.voxel_to_world(Vec3(i - 0.5, j - 0.5, k - 0.5)));
      }
      id[c] = vertex_of_root[root];
    }
    if (mirrored) {
      triangles.push_back({id[0], id[2], id[1]});
      triangles.push_back({id[0], id[3], id[2]});
    } else {
      triangles.push_back({id[0], id[1], id[2]});
      triangles.push_back({id[0], id[2], id[3]});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

}  // namespace cortexforge
