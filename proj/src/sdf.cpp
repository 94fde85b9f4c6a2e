#include "cortexforge/sdf.hpp"

#include <algorithm>
#include <cmath>

#include "cortexforge/bvh.hpp"
#include "cortexforge/error.hpp"
#include "cortexforge/parallel.hpp"

namespace cortexforge {

SdfVolume mesh_to_sdf(const TriangleMesh& mesh, const GridGeometry& geometry) {
  require_closed_genus_zero(mesh);
  const TriangleBvh bvh(mesh.vertices(), mesh.triangles());
  SdfVolume out(geometry);
  const Dims& n = geometry.dims();
  const std::size_t slab = static_cast<std::size_t>(n[0]) * n[1];
  parallel_for(static_cast<std::size_t>(n[2]), [&](std::size_t k) {
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 p = geometry.voxel_center(i, j, static_cast<int>(k));
        const double d = bvh.closest(p).distance;
        const bool inside = d > 0.0 && bvh.winding_number(p) > 0.5;
        out[k * slab + geometry.index(i, j, 0)] = inside ? -d : d;
      }
  });
  return out;
}

SdfVolume clip_sdf(const SdfVolume& vol, double bound) {
  if (!(bound > 0.0)) throw Error(ErrorCode::InvalidInput, "clip bound must be positive");
  SdfVolume out = vol;
  for (double& v : out.data()) v = std::clamp(v, -bound, bound);
  return out;
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "l1" || name == "L1") return LossKind::L1;
  if (name == "l2" || name == "L2") return LossKind::L2;
  if (name == "huber" || name == "Huber") return LossKind::Huber;
  throw Error(ErrorCode::InvalidInput, "unknown loss kind: " + std::string(name));
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::L1: return "l1";
    case LossKind::L2: return "l2";
    case LossKind::Huber: return "huber";
  }
  return "unknown";
}

double loss_term(double r, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::L1: return std::abs(r);
    case LossKind::L2: return r * r;
    case LossKind::Huber: {
      const double a = std::abs(r);
      return a <= spec.delta ? 0.5 * r * r : spec.delta * (a - 0.5 * spec.delta);
    }
  }
  return 0.0;
}

LossValue sdf_loss(const SdfVolume& prediction, const SdfVolume& target, const LossSpec& spec) {
  require_same_geometry(prediction.geometry(), target.geometry());
  if (spec.kind == LossKind::Huber && !(spec.delta > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "Huber delta must be positive");
  }
  std::vector<double> terms(prediction.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = loss_term(prediction[i] - target[i], spec);
  LossValue v;
  v.sum = pairwise_sum(terms);
  v.mean = terms.empty() ? 0.0 : v.sum / static_cast<double>(terms.size());
  return v;
}

}  // namespace cortexforge
