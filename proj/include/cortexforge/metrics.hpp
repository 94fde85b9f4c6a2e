#pragma once

#include <string>
#include <vector>

#include "cortexforge/mesh.hpp"

namespace cortexforge {

enum class SurfaceQuantity { Thickness, SulcalDepth, Curvature };

std::string_view to_string(SurfaceQuantity q);

/// One value per vertex of a mesh.
struct SurfaceScalars {
  SurfaceQuantity quantity;
  std::vector<double> values;

  double mean() const;
  double stddev() const;
};

struct DistanceReport {
  double aad = 0.0;   // mean of pooled two-way vertex-to-surface distances (mm)
  double hd90 = 0.0;  // nearest-rank 90th percentile of the pooled distances (mm)
  double mean_a_to_b = 0.0;
  double mean_b_to_a = 0.0;
};

/// Per vertex: half the sum of the white-to-pial and pial-to-white
/// point-to-surface distances. Both meshes must share connectivity.
SurfaceScalars thickness(const TriangleMesh& wm, const TriangleMesh& pial);

/// Mean-centred signed normal displacement accumulated during inflation.
/// Sulci come out positive, gyri negative.
SurfaceScalars sulcal_depth(const TriangleMesh& mesh, const std::vector<double>& inflation_displacement);

/// Mean curvature from the cotangent Laplace-Beltrami operator with mixed
/// Voronoi areas; positive where the surface bends away from its normal (a
/// sphere with outward winding has H = 1/r).
SurfaceScalars curvature(const TriangleMesh& mesh);

/// Sum over vertices of 2*pi minus the incident corner angles.
double total_angle_defect(const TriangleMesh& mesh);

/// Vertex-sampled symmetric surface distance statistics.
DistanceReport surface_distance(const TriangleMesh& a, const TriangleMesh& b);

/// Distances from each vertex of `from` to the surface of `to`.
std::vector<double> vertex_to_surface_distances(const TriangleMesh& from, const TriangleMesh& to);

/// Nearest-rank percentile (p in (0, 100]).
double nearest_rank_percentile(std::vector<double> values, double p);

}  // namespace cortexforge
