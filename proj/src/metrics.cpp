#include "cortexforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "cortexforge/bvh.hpp"
#include "cortexforge/error.hpp"
#include "cortexforge/parallel.hpp"

namespace cortexforge {

std::string_view to_string(SurfaceQuantity q) {
  switch (q) {
    case SurfaceQuantity::Thickness: return "thickness";
    case SurfaceQuantity::SulcalDepth: return "sulc";
    case SurfaceQuantity::Curvature: return "curv";
  }
  return "unknown";
}

double SurfaceScalars::mean() const {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

double SurfaceScalars::stddev() const {
  if (values.empty()) return 0.0;
  const double m = mean();
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m) * (values[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size()));
}

std::vector<double> vertex_to_surface_distances(const TriangleMesh& from, const TriangleMesh& to) {
  if (to.triangle_count() == 0) throw Error(ErrorCode::InvalidInput, "target mesh has no triangles");
  const TriangleBvh bvh(to.vertices(), to.triangles(), false);
  std::vector<double> d(from.vertex_count());
  parallel_for(d.size(), [&](std::size_t v) { d[v] = bvh.closest(from.vertices()[v]).distance; });
  return d;
}

SurfaceScalars thickness(const TriangleMesh& wm, const TriangleMesh& pial) {
  if (wm.vertex_count() != pial.vertex_count() || wm.triangles() != pial.triangles()) {
    throw Error(ErrorCode::InvalidInput, "white and pial meshes do not share connectivity");
  }
  const std::vector<double> w2p = vertex_to_surface_distances(wm, pial);
  const std::vector<double> p2w = vertex_to_surface_distances(pial, wm);
  SurfaceScalars s{SurfaceQuantity::Thickness, std::vector<double>(w2p.size())};
  for (std::size_t v = 0; v < w2p.size(); ++v) s.values[v] = 0.5 * (w2p[v] + p2w[v]);
  return s;
}

SurfaceScalars sulcal_depth(const TriangleMesh& mesh, const std::vector<double>& displacement) {
  if (displacement.size() != mesh.vertex_count()) {
    throw Error(ErrorCode::InvalidInput, "missing or mismatched inflation displacement record");
  }
  SurfaceScalars s{SurfaceQuantity::SulcalDepth, displacement};
  const double m = s.mean();
  for (double& v : s.values) v -= m;
  return s;
}

SurfaceScalars curvature(const TriangleMesh& mesh) {
  const CotangentLaplacian L = cotangent_laplacian(mesh);
  const std::size_t n = mesh.vertex_count();
  SurfaceScalars s{SurfaceQuantity::Curvature, std::vector<double>(n, 0.0)};
  for (std::size_t v = 0; v < n; ++v) {
    if (!(L.area[v] > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "vertex with zero mixed area");
    const Vec3 delta = L.lap[v] / L.area[v];
    const double h = 0.5 * delta.norm();
    s.values[v] = delta.dot(L.normal_sum[v]) <= 0.0 ? h : -h;
  }
  return s;
}

double total_angle_defect(const TriangleMesh& mesh) {
  const auto& x = mesh.vertices();
  std::vector<double> angle_sum(x.size(), 0.0);
  for (const Triangle& t : mesh.triangles()) {
    for (int c = 0; c < 3; ++c) {
      const Vec3 e1 = x[t[(c + 1) % 3]] - x[t[c]];
      const Vec3 e2 = x[t[(c + 2) % 3]] - x[t[c]];
      angle_sum[t[c]] += std::atan2(e1.cross(e2).norm(), e1.dot(e2));
    }
  }
  std::vector<double> defect(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) defect[v] = 2.0 * std::numbers::pi - angle_sum[v];
  return pairwise_sum(defect);
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::InvalidInput, "percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw Error(ErrorCode::InvalidInput, "percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

DistanceReport surface_distance(const TriangleMesh& a, const TriangleMesh& b) {
  if (a.vertex_count() == 0 || b.vertex_count() == 0 || a.triangle_count() == 0 || b.triangle_count() == 0) {
    throw Error(ErrorCode::InvalidInput, "surface distance needs two non-empty meshes");
  }
  const std::vector<double> ab = vertex_to_surface_distances(a, b);
  const std::vector<double> ba = vertex_to_surface_distances(b, a);
  // Pool as a sorted multiset so the result does not depend on argument order.
  std::vector<double> pooled = ab;
  pooled.insert(pooled.end(), ba.begin(), ba.end());
  std::sort(pooled.begin(), pooled.end());
  DistanceReport r;
  r.aad = pairwise_sum(pooled) / static_cast<double>(pooled.size());
  r.hd90 = nearest_rank_percentile(pooled, 90.0);
  r.mean_a_to_b = pairwise_sum(ab) / static_cast<double>(ab.size());
  r.mean_b_to_a = pairwise_sum(ba) / static_cast<double>(ba.size());
  return r;
}

}  // namespace cortexforge
