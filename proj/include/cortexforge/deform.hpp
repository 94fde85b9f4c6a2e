#pragma once

#include <string>
#include <vector>

#include "cortexforge/error.hpp"
#include "cortexforge/mesh.hpp"
#include "cortexforge/sdf.hpp"

namespace cortexforge {

struct DeformConfig {
  double lambda_normal = 0.0006;      // weight of the normal spring term
  double lambda_tangential = 0.0002;  // weight of the tangential spring term
  double step = 0.5;                  // gradient-descent step (mm^2 per unit energy)
  int max_iterations = 2000;
  /// Stop when the total energy fell by less than this fraction over the
  /// last `convergence_window` accepted steps.
  double convergence_rel = 1e-6;
  int convergence_window = 10;
  /// Stop when no vertex moved farther than this (mm) in a step accepted
  /// without backtracking.
  double displacement_tol = 1e-4;
  double shrink = 0.5;    // step multiplier after a rejected step
  double min_step = 1e-4;
  double grow = 1.2;      // step multiplier after an accepted step
  double max_step = 2.0;  // growth cap

  void validate() const;
};

struct EnergyBreakdown {
  double fidelity = 0.0;
  double normal = 0.0;
  double tangential = 0.0;
  double total = 0.0;  // fidelity + lambda_normal * normal + lambda_tangential * tangential
};

/// Per-term gradients with respect to vertex positions, frames held fixed.
struct EnergyGradient {
  std::vector<Vec3> fidelity;
  std::vector<Vec3> normal;
  std::vector<Vec3> tangential;

  std::vector<Vec3> total(const DeformConfig& cfg) const;
};

/// Surface energy: sum of tanh(D(x_v))^2 over vertices plus normal and
/// tangential springs over every ordered neighbour pair (v, u in N_v).
/// Throws OutOfDomain when a vertex falls outside the SDF grid.
EnergyBreakdown energy(const TriangleMesh& mesh, const SdfVolume& sdf, const VertexFrames& frames,
                       const DeformConfig& cfg);

/// Same energy with its gradient. `neighbors` must come from vertex_neighbors(mesh).
EnergyBreakdown energy(const TriangleMesh& mesh, const std::vector<std::vector<int>>& neighbors,
                       const SdfVolume& sdf, const VertexFrames& frames, const DeformConfig& cfg,
                       EnergyGradient* gradient);

struct TraceRow {
  int iteration = 0;
  double step = 0.0;
  EnergyBreakdown energy;
  int intersections_found = 0;  // rejected candidates that self-intersected
};

struct FitResult {
  TriangleMesh mesh;
  std::vector<TraceRow> trace;  // one row per accepted state, starting with the initial mesh
  std::string stop_reason;
  std::size_t frozen_vertices = 0;  // held in place after blocking every step by contact
};

class FitStalledError : public Error {
 public:
  FitStalledError(FitResult partial, const std::string& message)
      : Error(ErrorCode::FitStalled, message), partial_(std::move(partial)) {}

  const FitResult& partial() const { return partial_; }

 private:
  FitResult partial_;
};

/// Gradient descent on the surface energy with frames recomputed between
/// steps. A candidate step that self-intersects or raises the energy is
/// discarded and the step shrinks. When the step falls below min_step while
/// candidates still intersect, the vertices of the intersecting triangles are
/// frozen for the rest of the fit and the step restarts. Throws
/// FitStalledError when the initial mesh already self-intersects.
FitResult fit_surface(const TriangleMesh& init, const SdfVolume& sdf, const DeformConfig& cfg);

/// Pial placement: fit_surface started from the white-matter mesh, so vertex
/// v of the result corresponds to vertex v of the input.
FitResult fit_pial(const TriangleMesh& wm_mesh, const SdfVolume& pial_sdf, const DeformConfig& cfg);

}  // namespace cortexforge
