#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cortexforge/error.hpp"
#include "cortexforge/types.hpp"

namespace cortexforge {

using Dims = std::array<int, 3>;

/// Voxel lattice plus its placement in world millimetres. Voxel (i, j, k)
/// sits at affine * (i, j, k, 1); data is stored x-fastest.
class GridGeometry {
 public:
  GridGeometry(Dims dims, Vec3 spacing, Mat4 affine);

  /// Axis-aligned grid; voxel (0,0,0) is centred at `origin`.
  static GridGeometry axis_aligned(Dims dims, Vec3 spacing, Vec3 origin = Vec3::Zero());

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Mat4& affine() const { return affine_; }
  const Mat4& inverse_affine() const { return inverse_; }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }
  std::array<int, 3> coords(std::size_t index) const;
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }

  Vec3 voxel_to_world(const Vec3& ijk) const;
  Vec3 world_to_voxel(const Vec3& p) const;
  Vec3 voxel_center(int i, int j, int k) const { return voxel_to_world(Vec3(i, j, k)); }

  /// Linear part of the world-to-voxel map; transposed it turns voxel-space
  /// gradients into world-space gradients.
  Mat3 world_to_voxel_linear() const { return inverse_.topLeftCorner<3, 3>(); }

  /// Same lattice and same placement.
  bool same_as(const GridGeometry& other) const;

 private:
  Dims dims_;
  Vec3 spacing_;
  Mat4 affine_;
  Mat4 inverse_;
};

template <typename T>
class Volume {
 public:
  using value_type = T;

  explicit Volume(GridGeometry geometry, T fill = T{})
      : geometry_(std::move(geometry)), data_(geometry_.voxel_count(), fill) {}

  Volume(GridGeometry geometry, std::vector<T> data)
      : geometry_(std::move(geometry)), data_(std::move(data)) {
    if (data_.size() != geometry_.voxel_count()) {
      throw Error(ErrorCode::InvalidInput, "volume data length does not match grid dimensions");
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  const Dims& dims() const { return geometry_.dims(); }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t idx) { return data_[idx]; }
  const T& operator[](std::size_t idx) const { return data_[idx]; }
  T& at(int i, int j, int k) { return data_[geometry_.index(i, j, k)]; }
  const T& at(int i, int j, int k) const { return data_[geometry_.index(i, j, k)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  GridGeometry geometry_;
  std::vector<T> data_;
};

using ScalarVolume = Volume<double>;
using LabelVolume = Volume<std::uint16_t>;

enum class Interpolation { Trilinear, Nearest };

/// Trilinear blend at a world point; positions outside the grid clamp to the
/// border voxels.
double trilinear_sample(const ScalarVolume& vol, const Vec3& p);

/// Trilinear value and its world-space gradient. The gradient is zero along
/// axes where the point is clamped.
double trilinear_sample(const ScalarVolume& vol, const Vec3& p, Vec3& gradient);

/// Samples at continuous voxel coordinates (already in this volume's index space).
double sample_voxel(const ScalarVolume& vol, Vec3 ijk, Interpolation mode);
std::uint16_t sample_voxel(const LabelVolume& vol, Vec3 ijk);

/// Rounds voxel coordinates lying within 1e-9 of an integer, so that maps
/// which are the identity up to rounding sample voxels exactly.
Vec3 snap_to_lattice(Vec3 ijk);

ScalarVolume resample(const ScalarVolume& vol, const GridGeometry& target, Interpolation mode);
/// Labels resample with nearest only; asking for trilinear throws InvalidMode.
LabelVolume resample(const LabelVolume& vol, const GridGeometry& target,
                     Interpolation mode = Interpolation::Nearest);

/// Dilation then erosion with a cube of half-width `radius` (the radius-fold
/// 26-neighbourhood). Out-of-grid voxels are ignored by both passes, which
/// keeps the closing extensive at the grid border.
LabelVolume morphological_close(const LabelVolume& mask, int radius);
LabelVolume dilate(const LabelVolume& mask, int radius);
LabelVolume erode(const LabelVolume& mask, int radius);

/// Keeps the largest 6-connected foreground component. Ties go to the
/// component whose lowest linear index is smallest.
LabelVolume largest_component(const LabelVolume& mask);

/// 6-connected component labelling of foreground voxels. Components are
/// numbered from 1 in order of their lowest linear index.
std::vector<int> label_components(const LabelVolume& mask, int& count);

/// Fills background regions that are not 6-connected to the grid border.
LabelVolume fill_cavities(const LabelVolume& mask);

/// Adds foreground voxels until no 2x2 or 2x2x2 block is critical (diagonal
/// only contact of either phase), so the voxel-face surface is a manifold
/// without coincident vertices.
LabelVolume make_well_composed(const LabelVolume& mask);

/// Number of foreground (non-zero) voxels.
std::size_t count_foreground(const LabelVolume& mask);

/// Binary mask of voxels whose label equals one of `labels`.
LabelVolume select_labels(const LabelVolume& labels, std::initializer_list<std::uint16_t> keep);

void require_binary(const LabelVolume& mask);
void require_same_geometry(const GridGeometry& a, const GridGeometry& b);

}  // namespace cortexforge
