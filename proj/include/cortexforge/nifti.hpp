#pragma once

#include <filesystem>

#include "cortexforge/volume.hpp"

namespace cortexforge::nifti {

/// Stored voxel type. Scalars are written as float32, labels as int16 unless
/// a wider range is needed.
enum class DataType : short {
  Uint8 = 2,
  Int16 = 4,
  Float32 = 16,
};

/// Single-file NIfTI-1 (`.nii`, or gzip-compressed `.nii.gz`). The voxel to
/// world map comes from the sform, falling back to the qform; files with
/// neither are rejected. Only 3D uint8/int16/float32 data is accepted.
ScalarVolume read_scalar(const std::filesystem::path& path);
LabelVolume read_labels(const std::filesystem::path& path);

void write(const std::filesystem::path& path, const ScalarVolume& vol);
void write(const std::filesystem::path& path, const LabelVolume& vol);

}  // namespace cortexforge::nifti
