#include "cortexforge/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cortexforge/error.hpp"

namespace cortexforge {

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::Sphere: return "sphere";
    case PhantomKind::Concentric: return "concentric";
    case PhantomKind::Folded: return "folded";
  }
  return "unknown";
}

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "sphere") return PhantomKind::Sphere;
  if (name == "concentric") return PhantomKind::Concentric;
  if (name == "folded") return PhantomKind::Folded;
  throw Error(ErrorCode::InvalidInput, "unknown phantom kind: " + std::string(name));
}

void PhantomParams::validate(PhantomKind kind) const {
  if (size < 4) throw Error(ErrorCode::InvalidInput, "phantom grid needs at least 4 voxels per axis");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorCode::InvalidInput, "phantom spacing must be positive");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::InvalidInput, "phantom radius must be positive");
  }
  if (subdivisions < 0 || subdivisions > 7) {
    throw Error(ErrorCode::InvalidInput, "icosphere subdivisions must lie in [0, 7]");
  }
  double extent = radius;
  if (kind == PhantomKind::Concentric) {
    if (!(outer_radius > radius)) throw Error(ErrorCode::InvalidInput, "concentric phantom needs inner < outer radius");
    extent = outer_radius;
  }
  if (kind == PhantomKind::Folded) {
    if (!(fold_amplitude >= 0.0 && fold_amplitude < radius)) {
      throw Error(ErrorCode::InvalidInput, "fold amplitude must lie in [0, radius)");
    }
    if (fold_frequency < 0) throw Error(ErrorCode::InvalidInput, "fold frequency must be non-negative");
    extent = radius + fold_amplitude;
  }
  if (extent + spacing > (size / 2 - 1) * spacing) {
    throw Error(ErrorCode::InvalidInput, "phantom does not fit inside its grid");
  }
}

GridGeometry phantom_grid(const PhantomParams& p) {
  const double origin = -(p.size / 2) * p.spacing;
  return GridGeometry::axis_aligned({p.size, p.size, p.size}, Vec3::Constant(p.spacing), Vec3::Constant(origin));
}

SdfVolume sphere_sdf(const GridGeometry& grid, double radius, const Vec3& center) {
  SdfVolume out(grid, 0.0);
  const Dims& n = grid.dims();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) out.at(i, j, k) = (grid.voxel_center(i, j, k) - center).norm() - radius;
  return out;
}

TriangleMesh make_folded_sphere(double radius, double amplitude, int frequency, int subdivisions,
                                const Vec3& center) {
  const TriangleMesh unit = make_icosphere(1.0, subdivisions);
  std::vector<Vec3> v(unit.vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec3 d = unit.vertices()[i].normalized();
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    const double phi = std::atan2(d.y(), d.x());
    const double r = radius + amplitude * std::sin(frequency * theta) * std::sin(frequency * phi);
    v[i] = center + r * d;
  }
  return unit.with_vertices(std::move(v));
}

Phantom make_phantom(PhantomKind kind, const PhantomParams& p) {
  p.validate(kind);
  const GridGeometry grid = phantom_grid(p);
  Phantom out{kind, LabelVolume(grid, 0), {}, {}};
  switch (kind) {
    case PhantomKind::Sphere: {
      out.sdfs.push_back(sphere_sdf(grid, p.radius));
      out.meshes.push_back(make_icosphere(p.radius, p.subdivisions));
      break;
    }
    case PhantomKind::Concentric: {
      out.sdfs.push_back(sphere_sdf(grid, p.radius));
      out.sdfs.push_back(sphere_sdf(grid, p.outer_radius));
      out.meshes.push_back(make_icosphere(p.radius, p.subdivisions));
      out.meshes.push_back(make_icosphere(p.outer_radius, p.subdivisions));
      break;
    }
    case PhantomKind::Folded: {
      const TriangleMesh fine =
          make_folded_sphere(p.radius, p.fold_amplitude, p.fold_frequency, std::max(p.subdivisions, 6));
      out.sdfs.push_back(mesh_to_sdf(fine, grid));
      out.meshes.push_back(make_folded_sphere(p.radius, p.fold_amplitude, p.fold_frequency, p.subdivisions));
      break;
    }
  }
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (out.sdfs[0][i] <= 0.0) {
      out.labels[i] = 1;
    } else if (kind == PhantomKind::Concentric && out.sdfs[1][i] < 0.0) {
      out.labels[i] = 2;
    }
  }
  return out;
}

}  // namespace cortexforge
