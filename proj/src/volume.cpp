#include "cortexforge/volume.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include <Eigen/LU>

namespace cortexforge {

namespace {

// Voxel coordinates within this distance of an integer are treated as lying
// on it. Composite voxel maps such as inv(A) * A pick up rounding noise that
// would otherwise blend in neighbours at the 1e-16 level.
constexpr double kSnapTolerance = 1e-9;

double snap(double c) {
  const double r = std::round(c);
  return std::abs(c - r) < kSnapTolerance ? r : c;
}

void require_finite(const Vec3& p) {
  if (!p.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "non-finite sample position");
  }
}

// Lower corner index and fractional offset along one axis, clamped to the grid.
struct AxisCell {
  int i0;
  int i1;
  double t;
  bool clamped;
};

AxisCell axis_cell(double c, int n) {
  if (n == 1) return {0, 0, 0.0, true};
  if (c <= 0.0) return {0, 1, 0.0, c < 0.0};
  if (c >= n - 1) return {n - 2, n - 1, 1.0, c > n - 1};
  int i0 = static_cast<int>(std::floor(c));
  if (i0 > n - 2) i0 = n - 2;
  return {i0, i0 + 1, c - i0, false};
}

}  // namespace

GridGeometry::GridGeometry(Dims dims, Vec3 spacing, Mat4 affine)
    : dims_(dims), spacing_(std::move(spacing)), affine_(std::move(affine)) {
  for (int d : dims_) {
    if (d < 1) throw Error(ErrorCode::InvalidInput, "grid dimensions must be at least 1");
  }
  for (int a = 0; a < 3; ++a) {
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
      throw Error(ErrorCode::InvalidInput, "grid spacing must be positive");
    }
  }
  if (!affine_.allFinite()) throw Error(ErrorCode::InvalidInput, "grid affine is not finite");
  const double det = affine_.topLeftCorner<3, 3>().determinant();
  if (det == 0.0 || !std::isfinite(det)) {
    throw Error(ErrorCode::InvalidInput, "grid affine is singular");
  }
  inverse_ = affine_.inverse();
}

GridGeometry GridGeometry::axis_aligned(Dims dims, Vec3 spacing, Vec3 origin) {
  Mat4 a = Mat4::Identity();
  for (int i = 0; i < 3; ++i) a(i, i) = spacing[i];
  a.topRightCorner<3, 1>() = origin;
  return GridGeometry(dims, spacing, a);
}

std::array<int, 3> GridGeometry::coords(std::size_t index) const {
  const std::size_t nx = dims_[0];
  const std::size_t ny = dims_[1];
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
          static_cast<int>(index / (nx * ny))};
}

Vec3 GridGeometry::voxel_to_world(const Vec3& ijk) const {
  return affine_.topLeftCorner<3, 3>() * ijk + affine_.topRightCorner<3, 1>();
}

Vec3 GridGeometry::world_to_voxel(const Vec3& p) const {
  return inverse_.topLeftCorner<3, 3>() * p + inverse_.topRightCorner<3, 1>();
}

bool GridGeometry::same_as(const GridGeometry& other) const {
  return dims_ == other.dims_ && affine_ == other.affine_;
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b) {
  if (a.dims() != b.dims() || !a.affine().isApprox(b.affine(), 1e-9)) {
    throw Error(ErrorCode::GeometryMismatch, "volumes do not share grid geometry");
  }
}

double sample_voxel(const ScalarVolume& vol, Vec3 c, Interpolation mode) {
  const Dims& n = vol.dims();
  if (mode == Interpolation::Nearest) {
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      idx[a] = std::clamp(static_cast<int>(std::lround(c[a])), 0, n[a] - 1);
    }
    return vol.at(idx[0], idx[1], idx[2]);
  }
  const AxisCell x = axis_cell(c[0], n[0]);
  const AxisCell y = axis_cell(c[1], n[1]);
  const AxisCell z = axis_cell(c[2], n[2]);
  double value = 0.0;
  for (int a = 0; a < 2; ++a) {
    const double wx = a ? x.t : 1.0 - x.t;
    for (int b = 0; b < 2; ++b) {
      const double wy = b ? y.t : 1.0 - y.t;
      for (int d = 0; d < 2; ++d) {
        const double wz = d ? z.t : 1.0 - z.t;
        value += wx * wy * wz * vol.at(a ? x.i1 : x.i0, b ? y.i1 : y.i0, d ? z.i1 : z.i0);
      }
    }
  }
  return value;
}

std::uint16_t sample_voxel(const LabelVolume& vol, Vec3 c) {
  const Dims& n = vol.dims();
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    idx[a] = std::clamp(static_cast<int>(std::lround(c[a])), 0, n[a] - 1);
  }
  return vol.at(idx[0], idx[1], idx[2]);
}

double trilinear_sample(const ScalarVolume& vol, const Vec3& p) {
  require_finite(p);
  return sample_voxel(vol, vol.geometry().world_to_voxel(p), Interpolation::Trilinear);
}

double trilinear_sample(const ScalarVolume& vol, const Vec3& p, Vec3& gradient) {
  require_finite(p);
  const Vec3 c = vol.geometry().world_to_voxel(p);
  const Dims& n = vol.dims();
  const AxisCell x = axis_cell(c[0], n[0]);
  const AxisCell y = axis_cell(c[1], n[1]);
  const AxisCell z = axis_cell(c[2], n[2]);
  double w[2][2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d)
        w[a][b][d] = vol.at(a ? x.i1 : x.i0, b ? y.i1 : y.i0, d ? z.i1 : z.i0);

  const double tx = x.t, ty = y.t, tz = z.t;
  double value = 0.0;
  Vec3 g = Vec3::Zero();
  for (int a = 0; a < 2; ++a) {
    const double wx = a ? tx : 1.0 - tx;
    const double dx = a ? 1.0 : -1.0;
    for (int b = 0; b < 2; ++b) {
      const double wy = b ? ty : 1.0 - ty;
      const double dy = b ? 1.0 : -1.0;
      for (int d = 0; d < 2; ++d) {
        const double wz = d ? tz : 1.0 - tz;
        const double dz = d ? 1.0 : -1.0;
        const double f = w[a][b][d];
        value += wx * wy * wz * f;
        g[0] += dx * wy * wz * f;
        g[1] += wx * dy * wz * f;
        g[2] += wx * wy * dz * f;
      }
    }
  }
  if (x.clamped) g[0] = 0.0;
  if (y.clamped) g[1] = 0.0;
  if (z.clamped) g[2] = 0.0;
  gradient = vol.geometry().world_to_voxel_linear().transpose() * g;
  return value;
}

namespace {

template <typename T, typename Fn>
Volume<T> resample_impl(const Volume<T>& vol, const GridGeometry& target, Fn&& sample) {
  const Mat4 composite = vol.geometry().inverse_affine() * target.affine();
  const Mat3 lin = composite.topLeftCorner<3, 3>();
  const Vec3 off = composite.topRightCorner<3, 1>();
  Volume<T> out(target);
  const Dims& n = target.dims();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        Vec3 c = lin * Vec3(i, j, k) + off;
        for (int a = 0; a < 3; ++a) c[a] = snap(c[a]);
        out.at(i, j, k) = sample(c);
      }
  return out;
}

}  // namespace

Vec3 snap_to_lattice(Vec3 ijk) {
  for (int a = 0; a < 3; ++a) ijk[a] = snap(ijk[a]);
  return ijk;
}

ScalarVolume resample(const ScalarVolume& vol, const GridGeometry& target, Interpolation mode) {
  return resample_impl(vol, target, [&](const Vec3& c) { return sample_voxel(vol, c, mode); });
}

LabelVolume resample(const LabelVolume& vol, const GridGeometry& target, Interpolation mode) {
  if (mode != Interpolation::Nearest) {
    throw Error(ErrorCode::InvalidMode, "label volumes only support nearest-neighbour resampling");
  }
  return resample_impl(vol, target, [&](const Vec3& c) { return sample_voxel(vol, c); });
}

void require_binary(const LabelVolume& mask) {
  for (auto v : mask.data()) {
    if (v > 1) throw Error(ErrorCode::InvalidInput, "mask is not binary");
  }
}

std::size_t count_foreground(const LabelVolume& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](auto v) { return v != 0; }));
}

LabelVolume select_labels(const LabelVolume& labels, std::initializer_list<std::uint16_t> keep) {
  LabelVolume out(labels.geometry());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = std::find(keep.begin(), keep.end(), labels[i]) != keep.end() ? 1 : 0;
  }
  return out;
}

namespace {

// Running max (dilate) or min (erode) of a binary mask along one axis over a
// window of half-width r, considering in-grid voxels only.
void filter_axis(std::vector<std::uint16_t>& data, const Dims& n, int axis, int r, bool dilate) {
  const std::size_t stride[3] = {1, static_cast<std::size_t>(n[0]),
                                 static_cast<std::size_t>(n[0]) * n[1]};
  const int len = n[axis];
  const int u = axis == 0 ? 1 : 0;
  const int v = axis == 2 ? 1 : 2;
  std::vector<std::uint16_t> line(len);
  std::vector<int> prefix(len + 1);
  for (int b = 0; b < n[v]; ++b)
    for (int a = 0; a < n[u]; ++a) {
      const std::size_t base = a * stride[u] + b * stride[v];
      prefix[0] = 0;
      for (int i = 0; i < len; ++i) {
        line[i] = data[base + i * stride[axis]];
        prefix[i + 1] = prefix[i] + (line[i] ? 1 : 0);
      }
      for (int i = 0; i < len; ++i) {
        const int lo = std::max(0, i - r);
        const int hi = std::min(len - 1, i + r);
        const int ones = prefix[hi + 1] - prefix[lo];
        const bool on = dilate ? ones > 0 : ones == hi - lo + 1;
        data[base + i * stride[axis]] = on ? 1 : 0;
      }
    }
}

LabelVolume morph(const LabelVolume& mask, int radius, bool dilate_pass) {
  require_binary(mask);
  if (radius < 1) throw Error(ErrorCode::InvalidInput, "structuring element radius must be >= 1");
  LabelVolume out = mask;
  for (int axis = 0; axis < 3; ++axis) filter_axis(out.data(), mask.dims(), axis, radius, dilate_pass);
  return out;
}

}  // namespace

LabelVolume dilate(const LabelVolume& mask, int radius) { return morph(mask, radius, true); }
LabelVolume erode(const LabelVolume& mask, int radius) { return morph(mask, radius, false); }

LabelVolume morphological_close(const LabelVolume& mask, int radius) {
  return erode(dilate(mask, radius), radius);
}

std::vector<int> label_components(const LabelVolume& mask, int& count) {
  const GridGeometry& g = mask.geometry();
  const Dims& n = g.dims();
  std::vector<int> comp(mask.size(), 0);
  count = 0;
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || comp[seed]) continue;
    ++count;
    comp[seed] = count;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const auto [i, j, k] = g.coords(cur);
      const int nb[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                            {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= n[0] || q[1] >= n[1] || q[2] >= n[2]) continue;
        const std::size_t idx = g.index(q[0], q[1], q[2]);
        if (mask[idx] && !comp[idx]) {
          comp[idx] = count;
          queue.push_back(idx);
        }
      }
    }
  }
  return comp;
}

LabelVolume largest_component(const LabelVolume& mask) {
  require_binary(mask);
  int count = 0;
  const std::vector<int> comp = label_components(mask, count);
  if (count == 0) throw Error(ErrorCode::EmptyMask, "mask has no foreground voxels");
  std::vector<std::size_t> sizes(count + 1, 0);
  for (int c : comp) ++sizes[c];
  // Components are numbered by lowest linear index, so the first maximum wins ties.
  int best = 1;
  for (int c = 2; c <= count; ++c) {
    if (sizes[c] > sizes[best]) best = c;
  }
  LabelVolume out(mask.geometry());
  for (std::size_t i = 0; i < comp.size(); ++i) out[i] = comp[i] == best ? 1 : 0;
  return out;
}

LabelVolume fill_cavities(const LabelVolume& mask) {
  require_binary(mask);
  const GridGeometry& g = mask.geometry();
  const Dims& n = g.dims();
  std::vector<char> outside(mask.size(), 0);
  std::deque<std::size_t> queue;
  auto push = [&](int i, int j, int k) {
    const std::size_t idx = g.index(i, j, k);
    if (!mask[idx] && !outside[idx]) {
      outside[idx] = 1;
      queue.push_back(idx);
    }
  };
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (i == 0 || j == 0 || k == 0 || i == n[0] - 1 || j == n[1] - 1 || k == n[2] - 1) push(i, j, k);
      }
  while (!queue.empty()) {
    const auto [i, j, k] = g.coords(queue.front());
    queue.pop_front();
    if (i > 0) push(i - 1, j, k);
    if (i + 1 < n[0]) push(i + 1, j, k);
    if (j > 0) push(i, j - 1, k);
    if (j + 1 < n[1]) push(i, j + 1, k);
    if (k > 0) push(i, j, k - 1);
    if (k + 1 < n[2]) push(i, j, k + 1);
  }
  LabelVolume out = mask;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i] && !outside[i]) out[i] = 1;
  }
  return out;
}

LabelVolume make_well_composed(const LabelVolume& mask) {
  require_binary(mask);
  LabelVolume out = mask;
  const GridGeometry& g = out.geometry();
  const Dims& n = g.dims();
  // Blocks touching the grid border cannot be critical: out-of-grid voxels are
  // background and a critical pattern needs foreground on both diagonals.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int k = 0; k + 1 < n[2]; ++k)
      for (int j = 0; j + 1 < n[1]; ++j)
        for (int i = 0; i + 1 < n[0]; ++i) {
          std::size_t idx[8];
          int fg = 0;
          for (int c = 0; c < 8; ++c) {
            idx[c] = g.index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
            fg += out[idx[c]] ? 1 : 0;
          }
          if (fg == 0 || fg == 8) continue;
          auto on = [&](int c) { return out[idx[c]] != 0; };
          bool fill_all = false;
          // Vertex-critical: exactly two antipodal voxels of one phase.
          for (int c = 0; c < 4 && !fill_all; ++c) {
            const int d = 7 - c;
            if (fg == 2 && on(c) && on(d)) fill_all = true;
            if (fg == 6 && !on(c) && !on(d)) fill_all = true;
          }
          // Edge-critical: a face of the block with a checkerboard pattern.
          // Faces are listed as cyclic corner quadruples.
          static constexpr int faces[6][4] = {{0, 1, 3, 2}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                              {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 3, 7, 5}};
          for (const auto& f : faces) {
            if (fill_all) break;
            if (on(f[0]) == on(f[2]) && on(f[1]) == on(f[3]) && on(f[0]) != on(f[1])) {
              for (int c : f) {
                if (!out[idx[c]]) {
                  out[idx[c]] = 1;
                  changed = true;
                }
              }
            }
          }
          if (fill_all) {
            for (int c = 0; c < 8; ++c) out[idx[c]] = 1;
            changed = true;
          }
        }
  }
  return out;
}

}  // namespace cortexforge
