#pragma once

#include <string_view>
#include <vector>

#include "cortexforge/mesh.hpp"
#include "cortexforge/sdf.hpp"
#include "cortexforge/volume.hpp"

namespace cortexforge {

enum class PhantomKind { Sphere, Concentric, Folded };

std::string_view to_string(PhantomKind kind);
PhantomKind parse_phantom_kind(std::string_view name);

struct PhantomParams {
  int size = 64;             // voxels per axis
  double spacing = 1.0;      // mm
  double radius = 12.0;      // sphere / inner / base radius (mm)
  double outer_radius = 15.0;
  double fold_amplitude = 1.5;
  int fold_frequency = 6;
  int subdivisions = 4;      // reference icosphere level

  void validate(PhantomKind kind) const;
};

/// Surfaces are centred on world 0, which is voxel (size/2, size/2, size/2).
/// Sphere: label 1 inside. Concentric: 1 inner ball, 2 shell. Folded:
/// r(theta, phi) = radius + amplitude sin(f theta) sin(f phi), label 1 inside.
struct Phantom {
  PhantomKind kind;
  LabelVolume labels;
  std::vector<TriangleMesh> meshes;  // inner first
  std::vector<SdfVolume> sdfs;       // one per mesh, negative inside
};

Phantom make_phantom(PhantomKind kind, const PhantomParams& params);

GridGeometry phantom_grid(const PhantomParams& params);

/// Icosphere whose vertex directions are pushed to the folded radius.
TriangleMesh make_folded_sphere(double radius, double amplitude, int frequency, int subdivisions,
                                const Vec3& center = Vec3::Zero());

/// Analytic ||x - c|| - r on a grid.
SdfVolume sphere_sdf(const GridGeometry& grid, double radius, const Vec3& center = Vec3::Zero());

}  // namespace cortexforge
