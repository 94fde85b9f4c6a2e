#include <string>

#include "cortexforge/error.hpp"
#include "cortexforge/mesh.hpp"

namespace cortexforge {

namespace {

constexpr int kMaxRepairRounds = 5;

// Cavity filling and well-composedness fixes only add voxels, and each can
// re-trigger the other, so iterate to a fixed point.
LabelVolume settle(LabelVolume m) {
  for (;;) {
    LabelVolume next = make_well_composed(fill_cavities(m));
    if (next.data() == m.data()) return m;
    m = std::move(next);
  }
}

bool genus_zero(const TriangleMesh& mesh) { return inspect_manifold(mesh).closed_genus_zero(); }

}  // namespace

GenusZeroResult ensure_genus_zero(const LabelVolume& mask) {
  require_binary(mask);
  if (count_foreground(mask) == 0) throw Error(ErrorCode::EmptyMask, "mask has no foreground voxels");

  {
    const LabelVolume cleaned = settle(largest_component(mask));
    if (cleaned.data() == mask.data()) {
      TriangleMesh mesh = tessellate(mask);
      if (genus_zero(mesh)) return {mask, std::move(mesh), 0};
    }
  }

  LabelVolume m = mask;
  long euler = 0;
  for (int round = 1; round <= kMaxRepairRounds; ++round) {
    m = largest_component(m);
    m = morphological_close(m, round);
    m = settle(largest_component(m));
    m = largest_component(m);
    TriangleMesh mesh = tessellate(m);
    euler = euler_characteristic(mesh);
    if (genus_zero(mesh)) return {std::move(m), std::move(mesh), round};
  }
  throw TopologyRepairError(euler, "topology repair failed after " + std::to_string(kMaxRepairRounds) +
                                       " rounds (euler characteristic " + std::to_string(euler) + ")");
}

}  // namespace cortexforge
