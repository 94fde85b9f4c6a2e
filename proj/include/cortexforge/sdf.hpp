#pragma once

#include <string>
#include <string_view>

#include "cortexforge/mesh.hpp"
#include "cortexforge/volume.hpp"

namespace cortexforge {

/// Signed distances in mm, negative inside the surface.
using SdfVolume = ScalarVolume;

inline constexpr double kDefaultClipMm = 5.0;

/// Exact point-to-surface distance at every voxel centre, signed by the
/// generalized winding number (inside when winding > 0.5). The mesh must be a
/// closed, consistently oriented genus-0 surface.
SdfVolume mesh_to_sdf(const TriangleMesh& mesh, const GridGeometry& geometry);

/// Clamps every value to [-bound, bound].
SdfVolume clip_sdf(const SdfVolume& vol, double bound = kDefaultClipMm);

enum class LossKind { L1, L2, Huber };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::L2;
  double delta = 1.0;  // Huber knee in mm
};

struct LossValue {
  double sum = 0.0;   // voxelwise sum
  double mean = 0.0;  // sum / voxel count
};

/// Voxelwise L1, L2 or Huber loss between a prediction and a clipped target.
LossValue sdf_loss(const SdfVolume& prediction, const SdfVolume& target, const LossSpec& spec);

/// Per-voxel loss term for residual r.
double loss_term(double residual, const LossSpec& spec);

}  // namespace cortexforge
