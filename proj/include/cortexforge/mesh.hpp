#pragma once

#include <utility>
#include <vector>

#include "cortexforge/types.hpp"
#include "cortexforge/volume.hpp"

namespace cortexforge {

/// Vertex positions in world millimetres plus triangle connectivity.
/// Construction checks index ranges and rejects triangles that repeat a vertex.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  /// Same connectivity, new positions.
  TriangleMesh with_vertices(std::vector<Vec3> vertices) const;
  /// Same positions, every triangle wound the other way.
  TriangleMesh flipped() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
};

using Edge = std::pair<int, int>;

/// Unique undirected edges, each stored as (low, high), sorted.
std::vector<Edge> unique_edges(const TriangleMesh& mesh);

/// One-ring neighbours of every vertex, sorted ascending.
std::vector<std::vector<int>> vertex_neighbors(const TriangleMesh& mesh);

/// V - E + F with E counted over unique undirected edges.
long euler_characteristic(const TriangleMesh& mesh);

/// Number of connected components of the triangle graph (isolated vertices
/// count as their own components).
int connected_components(const TriangleMesh& mesh);

struct ManifoldReport {
  bool edge_manifold = false;       // every edge bounds exactly two triangles
  bool consistently_oriented = false;
  bool vertex_manifold = false;     // each vertex umbrella is a single fan
  int components = 0;
  long euler = 0;

  bool closed_genus_zero() const {
    return edge_manifold && consistently_oriented && vertex_manifold && components == 1 && euler == 2;
  }
};

ManifoldReport inspect_manifold(const TriangleMesh& mesh);

/// Throws ErrorCode::Topology unless the mesh is a closed, consistently
/// oriented, connected genus-0 manifold.
void require_closed_genus_zero(const TriangleMesh& mesh);

/// Signed enclosed volume (positive for outward winding).
double signed_volume(const TriangleMesh& mesh);
double surface_area(const TriangleMesh& mesh);
Vec3 vertex_centroid(const TriangleMesh& mesh);

/// Subdivided icosahedron projected onto a sphere. Level 0 has 20 faces;
/// each level quadruples the face count.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

/// Voxel-face surface of a binary mask. Every face between a foreground voxel
/// and a background (or out-of-grid) voxel becomes two outward-facing
/// triangles with corners on the voxel-corner lattice. Corners are shared by
/// faces that meet along a common foreground sheet, so diagonal-only voxel
/// contacts yield separate (coincident) vertices and the result is always
/// edge-manifold.
TriangleMesh tessellate(const LabelVolume& mask);

struct GenusZeroResult {
  LabelVolume mask;
  TriangleMesh mesh;
  int rounds = 0;  // repair rounds applied; 0 when the input was already fine
};

/// Repairs a binary mask until its tessellation is a single genus-0 surface:
/// largest component, closing (radius = round), cavity filling and
/// well-composedness fixes, for at most five rounds. Throws
/// TopologyRepairError carrying the final Euler characteristic otherwise.
GenusZeroResult ensure_genus_zero(const LabelVolume& mask);

/// Two-phase (lambda|mu) uniform Laplacian smoothing. One iteration is a
/// shrink step with `lambda` followed by an inflate step with `mu`.
TriangleMesh smooth(const TriangleMesh& mesh, int iterations, double lambda = 0.5, double mu = -0.53);

struct VertexFrames {
  std::vector<Vec3> normal;
  std::vector<Vec3> tangent1;
  std::vector<Vec3> tangent2;
};

/// Area-weighted vertex normals and a tangent basis built from the global z
/// axis (x when the normal is within ~25 degrees of z).
VertexFrames vertex_frames(const TriangleMesh& mesh);

/// Non-adjacent triangle pairs (i < j, sorted) whose closed triangles
/// intersect. Pairs sharing a vertex are skipped.
std::vector<std::pair<int, int>> self_intersections(const TriangleMesh& mesh);

/// Same contract as self_intersections, testing every pair directly.
std::vector<std::pair<int, int>> self_intersections_brute_force(const TriangleMesh& mesh);

struct InflationResult {
  TriangleMesh mesh;
  /// Accumulated signed displacement along the outward normal per vertex.
  std::vector<double> displacement;
};

/// Cotangent Laplacian with mixed Voronoi areas. lap[v] / area[v] = -2 H n
/// for outward normals; weight_sum[v] is the sum of |cot| edge weights.
struct CotangentLaplacian {
  std::vector<Vec3> lap;
  std::vector<double> area;
  std::vector<double> weight_sum;
  std::vector<Vec3> normal_sum;  // area-weighted, unnormalised
};

/// Throws DegenerateGeometry on a zero-area triangle.
CotangentLaplacian cotangent_laplacian(const TriangleMesh& mesh);

/// Explicit mean-curvature flow along the normals plus uniform Laplacian
/// relaxation within the tangent plane, each step followed by a uniform
/// rescale about the vertex centroid that restores the original surface area.
/// `step` is the time step in units of a quarter of the mean squared edge
/// length, and the tangential relaxation factor.
InflationResult inflate(const TriangleMesh& mesh, int iterations, double step = 0.5);

}  // namespace cortexforge
