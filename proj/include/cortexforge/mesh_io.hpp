#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cortexforge/mesh.hpp"

namespace cortexforge::io {

/// Named per-vertex scalar written as a PLY vertex property.
struct VertexProperty {
  std::string name;
  std::vector<double> values;
};

TriangleMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Binary little-endian PLY. Coordinates are stored as doubles; extra vertex
/// properties as floats.
TriangleMesh read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
               const std::vector<VertexProperty>& properties = {});

/// Dispatches on the extension (.obj or .ply).
TriangleMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace cortexforge::io
