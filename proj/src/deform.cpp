#include "cortexforge/deform.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "cortexforge/parallel.hpp"

namespace cortexforge {

void DeformConfig::validate() const {
  if (!(lambda_normal >= 0.0) || !(lambda_tangential >= 0.0)) {
    throw Error(ErrorCode::InvalidInput, "spring weights must be non-negative");
  }
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::InvalidInput, "shrink factor must be in (0, 1)");
  if (!(min_step > 0.0 && min_step < step)) {
    throw Error(ErrorCode::InvalidInput, "min step must be positive and below the initial step");
  }
  if (!(grow >= 1.0) || !(max_step >= step)) {
    throw Error(ErrorCode::InvalidInput, "growth factor must be >= 1 and max step >= step");
  }
  if (max_iterations < 0 || convergence_window < 1) {
    throw Error(ErrorCode::InvalidInput, "iteration limits must be non-negative");
  }
}

std::vector<Vec3> EnergyGradient::total(const DeformConfig& cfg) const {
  std::vector<Vec3> g(fidelity.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    g[v] = fidelity[v] + cfg.lambda_normal * normal[v] + cfg.lambda_tangential * tangential[v];
  }
  return g;
}

namespace {

void require_in_domain(const SdfVolume& sdf, const Vec3& x) {
  const Vec3 c = sdf.geometry().world_to_voxel(x);
  const Dims& n = sdf.dims();
  for (int a = 0; a < 3; ++a) {
    if (!(c[a] >= -0.5 && c[a] <= n[a] - 0.5)) {
      throw Error(ErrorCode::OutOfDomain, "mesh vertex lies outside the SDF grid");
    }
  }
}

}  // namespace

EnergyBreakdown energy(const TriangleMesh& mesh, const std::vector<std::vector<int>>& nb,
                       const SdfVolume& sdf, const VertexFrames& frames, const DeformConfig& cfg,
                       EnergyGradient* gradient) {
  const auto& x = mesh.vertices();
  const std::size_t n = x.size();
  std::vector<double> fid(n), nrm(n), tan(n);
  if (gradient) {
    gradient->fidelity.assign(n, Vec3::Zero());
    gradient->normal.assign(n, Vec3::Zero());
    gradient->tangential.assign(n, Vec3::Zero());
  }
  for (std::size_t v = 0; v < n; ++v) require_in_domain(sdf, x[v]);

  // Each vertex gathers its own terms; the cross terms it contributes to its
  // neighbours' gradients are gathered from the neighbour side as well, so
  // writes stay per-vertex and the loop can run in parallel.
  parallel_for(n, [&](std::size_t v) {
    Vec3 grad_d;
    const double d = trilinear_sample(sdf, x[v], grad_d);
    const double th = std::tanh(d);
    fid[v] = th * th;
    const Vec3& nv = frames.normal[v];
    const Vec3& e1 = frames.tangent1[v];
    const Vec3& e2 = frames.tangent2[v];
    double sn = 0.0, st = 0.0;
    for (int u : nb[v]) {
      const Vec3 diff = x[v] - x[u];
      const double a = nv.dot(diff);
      const double b = e1.dot(diff);
      const double c = e2.dot(diff);
      sn += a * a;
      st += b * b + c * c;
    }
    nrm[v] = sn;
    tan[v] = st;
    if (!gradient) return;
    gradient->fidelity[v] = 2.0 * th * (1.0 - th * th) * grad_d;
    Vec3 gn = Vec3::Zero(), gt = Vec3::Zero();
    for (int u : nb[v]) {
      // Term (v, u): d/dx_v of (n_v . (x_v - x_u))^2.
      const Vec3 dv = x[v] - x[u];
      gn += 2.0 * nv.dot(dv) * nv;
      gt += 2.0 * (e1.dot(dv) * e1 + e2.dot(dv) * e2);
      // Term (u, v): d/dx_v of (n_u . (x_u - x_v))^2.
      const Vec3 du = x[u] - x[v];
      const Vec3& nu = frames.normal[u];
      const Vec3& f1 = frames.tangent1[u];
      const Vec3& f2 = frames.tangent2[u];
      gn -= 2.0 * nu.dot(du) * nu;
      gt -= 2.0 * (f1.dot(du) * f1 + f2.dot(du) * f2);
    }
    gradient->normal[v] = gn;
    gradient->tangential[v] = gt;
  });

  EnergyBreakdown e;
  e.fidelity = pairwise_sum(fid);
  e.normal = pairwise_sum(nrm);
  e.tangential = pairwise_sum(tan);
  e.total = e.fidelity + cfg.lambda_normal * e.normal + cfg.lambda_tangential * e.tangential;
  return e;
}

EnergyBreakdown energy(const TriangleMesh& mesh, const SdfVolume& sdf, const VertexFrames& frames,
                       const DeformConfig& cfg) {
  return energy(mesh, vertex_neighbors(mesh), sdf, frames, cfg, nullptr);
}

FitResult fit_surface(const TriangleMesh& init, const SdfVolume& sdf, const DeformConfig& cfg) {
  cfg.validate();
  require_closed_genus_zero(init);
  const auto nb = vertex_neighbors(init);

  FitResult result;
  result.mesh = init;
  if (!self_intersections(init).empty()) {
    result.stop_reason = "initial mesh self-intersects";
    throw FitStalledError(std::move(result), "initial mesh self-intersects");
  }

  EnergyGradient grad;
  EnergyBreakdown current = energy(init, nb, sdf, vertex_frames(init), cfg, &grad);
  std::vector<char> frozen(init.vertex_count(), 0);
  auto descent = [&](const EnergyGradient& g) {
    std::vector<Vec3> d = g.total(cfg);
    for (std::size_t v = 0; v < d.size(); ++v)
      if (frozen[v]) d[v] = Vec3::Zero();
    return d;
  };
  std::vector<Vec3> direction = descent(grad);
  result.trace.push_back({0, cfg.step, current, 0});

  double step = cfg.step;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    int intersections = 0;
    std::optional<TriangleMesh> accepted;
    EnergyBreakdown candidate_energy;
    EnergyGradient candidate_grad;
    double max_move = 0.0;
    const double entry_step = step;
    while (!accepted) {
      std::vector<Vec3> moved = result.mesh.vertices();
      max_move = 0.0;
      for (std::size_t v = 0; v < moved.size(); ++v) {
        moved[v] -= step * direction[v];
        max_move = std::max(max_move, step * direction[v].norm());
      }
      TriangleMesh candidate = result.mesh.with_vertices(std::move(moved));
      bool ok = true;
      std::vector<std::pair<int, int>> hits;
      try {
        candidate_energy = energy(candidate, nb, sdf, vertex_frames(candidate), cfg, &candidate_grad);
        ok = candidate_energy.total <= current.total;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutOfDomain && e.code() != ErrorCode::DegenerateGeometry) throw;
        ok = false;
      }
      if (ok) {
        hits = self_intersections(candidate);
        if (!hits.empty()) {
          ok = false;
          ++intersections;
        }
      }
      if (ok) {
        accepted = std::move(candidate);
        break;
      }
      step *= cfg.shrink;
      if (step >= cfg.min_step) continue;
      if (hits.empty()) {
        result.stop_reason = "step fell below minimum without energy decrease";
        return result;
      }
      for (const auto& [a, b] : hits)
        for (int t : {a, b})
          for (int v : init.triangles()[t]) {
            if (!frozen[v]) ++result.frozen_vertices;
            frozen[v] = 1;
          }
      if (result.frozen_vertices == frozen.size()) {
        result.stop_reason = "every vertex frozen by contact";
        return result;
      }
      direction = descent(grad);
      step = cfg.step;
    }

    result.mesh = std::move(*accepted);
    current = candidate_energy;
    grad = std::move(candidate_grad);
    direction = descent(grad);
    result.trace.push_back({it, step, current, intersections});
    step = std::min(step * cfg.grow, cfg.max_step);

    if (max_move < cfg.displacement_tol && result.trace.back().step >= entry_step) {
      result.stop_reason = "displacement below tolerance";
      return result;
    }
    const std::size_t k = result.trace.size();
    if (k > static_cast<std::size_t>(cfg.convergence_window)) {
      const double before = result.trace[k - 1 - cfg.convergence_window].energy.total;
      if (before <= 0.0 || (before - current.total) / before < cfg.convergence_rel) {
        result.stop_reason = "relative energy decrease below threshold";
        return result;
      }
    }
  }
  result.stop_reason = "iteration limit";
  return result;
}

FitResult fit_pial(const TriangleMesh& wm_mesh, const SdfVolume& pial_sdf, const DeformConfig& cfg) {
  return fit_surface(wm_mesh, pial_sdf, cfg);
}

}  // namespace cortexforge
