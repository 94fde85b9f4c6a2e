#include "cortexforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cortexforge/error.hpp"
#include "cortexforge/parallel.hpp"
#include "cortexforge/sdf.hpp"

namespace cortexforge {

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::Axial: return "axial";
    case Orientation::Coronal: return "coronal";
    case Orientation::Sagittal: return "sagittal";
    case Orientation::Isotropic: return "isotropic";
  }
  return "unknown";
}

Orientation parse_orientation(std::string_view name) {
  if (name == "axial") return Orientation::Axial;
  if (name == "coronal") return Orientation::Coronal;
  if (name == "sagittal") return Orientation::Sagittal;
  if (name == "isotropic") return Orientation::Isotropic;
  throw Error(ErrorCode::InvalidInput, "unknown orientation: " + std::string(name));
}

std::vector<int> slice_axes(Orientation o) {
  switch (o) {
    case Orientation::Sagittal: return {0};
    case Orientation::Coronal: return {1};
    case Orientation::Axial: return {2};
    case Orientation::Isotropic: return {0, 1, 2};
  }
  return {};
}

// ---------------------------------------------------------------- transform

SpatialTransform::SpatialTransform(Mat4 affine, std::vector<ScalarVolume> displacement)
    : affine_(std::move(affine)), control_(std::move(displacement)) {
  if (!control_.empty()) {
    if (control_.size() != 3) {
      throw Error(ErrorCode::InvalidInput, "displacement field needs three components");
    }
    require_same_geometry(control_[0].geometry(), control_[1].geometry());
    require_same_geometry(control_[0].geometry(), control_[2].geometry());
  }
}

Vec3 SpatialTransform::apply_affine(const Vec3& x) const {
  return affine_.topLeftCorner<3, 3>() * x + affine_.topRightCorner<3, 1>();
}

Vec3 SpatialTransform::displacement(const Vec3& x) const {
  if (control_.empty()) return Vec3::Zero();
  return {trilinear_sample(control_[0], x), trilinear_sample(control_[1], x), trilinear_sample(control_[2], x)};
}

bool SpatialTransform::is_identity() const {
  return control_.empty() && affine_ == Mat4::Identity();
}

GridGeometry control_grid(const GridGeometry& fine, double spacing_mm) {
  if (!(spacing_mm > 0.0)) throw Error(ErrorCode::InvalidInput, "control spacing must be positive");
  Dims dims{};
  Mat4 scale = Mat4::Identity();
  for (int a = 0; a < 3; ++a) {
    const double step = spacing_mm / fine.spacing()[a];
    scale(a, a) = step;
    dims[a] = std::max(2, static_cast<int>(std::ceil((fine.dims()[a] - 1) / step - 1e-9)) + 1);
  }
  return GridGeometry(dims, Vec3::Constant(spacing_mm), fine.affine() * scale);
}

namespace {

Mat3 rotation_xyz(const Vec3& deg) {
  const Vec3 r = deg * std::numbers::pi / 180.0;
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, std::cos(r[0]), -std::sin(r[0]), 0, std::sin(r[0]), std::cos(r[0]);
  ry << std::cos(r[1]), 0, std::sin(r[1]), 0, 1, 0, -std::sin(r[1]), 0, std::cos(r[1]);
  rz << std::cos(r[2]), -std::sin(r[2]), 0, std::sin(r[2]), std::cos(r[2]), 0, 0, 0, 1;
  return rz * ry * rx;
}

Vec3 grid_center(const GridGeometry& g) {
  return g.voxel_to_world(Vec3((g.dims()[0] - 1) / 2.0, (g.dims()[1] - 1) / 2.0, (g.dims()[2] - 1) / 2.0));
}

}  // namespace

SpatialTransform sample_transform(const SynthConfig& cfg, const GridGeometry& grid, Rng& rng) {
  cfg.validate();
  const double finest = grid.spacing().maxCoeff();
  if (cfg.warp.control_spacing_mm < 2.0 * finest) {
    throw Error(ErrorCode::InvalidInput, "warp control spacing must be at least twice the grid spacing");
  }
  const AffineSpec& a = cfg.affine;
  Vec3 rot, trans, scl;
  for (int i = 0; i < 3; ++i) rot[i] = a.rotation_deg[i].sample(rng);
  for (int i = 0; i < 3; ++i) trans[i] = a.translation_mm[i].sample(rng);
  for (int i = 0; i < 3; ++i) scl[i] = a.scaling[i].sample(rng);
  Mat3 shear = Mat3::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (r != c) shear(r, c) = a.shear.sample(rng);
  const Mat3 linear = rotation_xyz(rot) * shear * scl.asDiagonal();
  const Vec3 c = grid_center(grid);
  Mat4 affine = Mat4::Identity();
  affine.topLeftCorner<3, 3>() = linear;
  affine.topRightCorner<3, 1>() = trans + (c - linear * c);

  std::vector<ScalarVolume> control;
  if (cfg.warp.std_mm > 0.0) {
    const GridGeometry coarse = control_grid(grid, cfg.warp.control_spacing_mm);
    for (int comp = 0; comp < 3; ++comp) {
      ScalarVolume u(coarse, 0.0);
      for (double& v : u.data()) v = cfg.warp.std_mm * rng.normal();
      control.push_back(std::move(u));
    }
  }
  return SpatialTransform(affine, std::move(control));
}

std::array<ScalarVolume, 3> dense_displacement(const SpatialTransform& phi, const GridGeometry& grid) {
  std::array<ScalarVolume, 3> out{ScalarVolume(grid, 0.0), ScalarVolume(grid, 0.0), ScalarVolume(grid, 0.0)};
  if (phi.control_field().empty()) return out;
  for (int c = 0; c < 3; ++c) out[c] = upsample_field(phi.control_field()[c], grid);
  return out;
}

WarpedPair warp_pair(const LabelVolume& labels, const std::vector<ScalarVolume>& sdfs, const SpatialTransform& phi) {
  const GridGeometry& g = labels.geometry();
  for (const ScalarVolume& s : sdfs) {
    if (s.dims() != g.dims() || !s.geometry().affine().isApprox(g.affine(), 1e-9)) {
      throw Error(ErrorCode::InvalidInput, "labels and SDFs must share grid geometry");
    }
  }
  if (phi.is_identity()) return {labels, sdfs};
  WarpedPair out{LabelVolume(g, 0), std::vector<ScalarVolume>(sdfs.size(), ScalarVolume(g, 0.0))};
  const Dims& n = g.dims();
  parallel_for(static_cast<std::size_t>(n[2]), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 src = snap_to_lattice(g.world_to_voxel(phi(g.voxel_center(i, j, k))));
        const std::size_t idx = g.index(i, j, k);
        out.labels[idx] = sample_voxel(labels, src);
        for (std::size_t s = 0; s < sdfs.size(); ++s) {
          out.sdfs[s][idx] = sample_voxel(sdfs[s], src, Interpolation::Trilinear);
        }
      }
  });
  return out;
}

// --------------------------------------------------------------- intensities

ScalarVolume synth_intensities(const LabelVolume& labels, const GmmSpec& gmm, Rng& rng) {
  gmm.validate();
  std::vector<bool> present(65536, false);
  for (std::uint16_t l : labels.data()) present[l] = true;
  for (std::size_t l = 0; l < present.size(); ++l) {
    if (present[l] && gmm.find(static_cast<std::uint16_t>(l)) == nullptr) {
      throw Error(ErrorCode::MissingLabel, "no intensity model for label " + std::to_string(l));
    }
  }
  std::vector<double> mu(65536, 0.0), sigma(65536, 0.0);
  for (const GmmEntry& e : gmm.entries) {
    mu[e.label] = e.mean.sample(rng);
    sigma[e.label] = e.std.sample(rng);
  }
  ScalarVolume out(labels.geometry(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint16_t l = labels[i];
    out[i] = mu[l] + sigma[l] * rng.normal();
  }
  const auto [lo, hi] = std::minmax_element(out.data().begin(), out.data().end());
  const double mn = *lo;
  const double range = *hi - *lo;
  for (double& v : out.data()) v = range > 0.0 ? (v - mn) / range : 0.5;
  return out;
}

// ---------------------------------------------------------------------- bias

ScalarVolume sample_bias_field(const GridGeometry& fine, const BiasSpec& spec, Rng& rng) {
  spec.validate();
  const double amplitude = spec.amplitude.sample(rng);
  ScalarVolume coarse(control_grid(fine, spec.control_spacing_mm), 0.0);
  for (double& v : coarse.data()) v = amplitude * rng.normal();
  return coarse;
}

ScalarVolume upsample_field(const ScalarVolume& coarse, const GridGeometry& fine) {
  ScalarVolume out(fine, 0.0);
  const Dims& n = fine.dims();
  parallel_for(static_cast<std::size_t>(n[2]), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 c = snap_to_lattice(coarse.geometry().world_to_voxel(fine.voxel_center(i, j, k)));
        out.at(i, j, k) = sample_voxel(coarse, c, Interpolation::Trilinear);
      }
  });
  return out;
}

ScalarVolume apply_bias(const ScalarVolume& vol, const BiasSpec& spec, Rng& rng) {
  for (double v : vol.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidInput, "bias field input must be non-negative and finite");
    }
  }
  const ScalarVolume field = upsample_field(sample_bias_field(vol.geometry(), spec, rng), vol.geometry());
  ScalarVolume out = vol;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(field[i]);
  const double mx = *std::max_element(out.data().begin(), out.data().end());
  if (mx > 0.0) {
    for (double& v : out.data()) v /= mx;
  }
  return out;
}

// --------------------------------------------------------------- acquisition

AcquisitionParams sample_acquisition(const SynthConfig& cfg, Rng& rng) {
  cfg.acquisition.validate();
  AcquisitionParams p;
  const auto& choices = cfg.acquisition.orientations;
  if (choices.empty()) {
    p.orientation = static_cast<Orientation>(rng.uniform_index(4));
  } else if (choices.size() == 1) {
    p.orientation = choices.front();
  } else {
    p.orientation = choices[rng.uniform_index(choices.size())];
  }
  p.spacing_mm = cfg.acquisition.spacing_mm.sample(rng);
  p.thickness_mm = Interval{1.0, std::min(cfg.acquisition.max_thickness_mm, p.spacing_mm)}.sample(rng);
  p.noise_std = cfg.noise_std.sample(rng);
  return p;
}

std::vector<double> gaussian_taps(double fwhm_vox) {
  if (!(fwhm_vox > 0.0) || !std::isfinite(fwhm_vox)) {
    throw Error(ErrorCode::InvalidInput, "kernel width must be positive");
  }
  const double sigma = fwhm_vox / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

// A dense 3D buffer whose extent changes axis by axis.
struct Buffer {
  Dims dims;
  std::vector<double> data;

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(dims[a]);
    return s;
  }
};

// Runs `fn(in_line, out_line)` over every line along `axis`, producing a
// buffer whose extent along that axis is `out_len`.
template <typename Fn>
Buffer map_lines(const Buffer& in, int axis, int out_len, Fn fn) {
  Buffer out{in.dims, {}};
  out.dims[axis] = out_len;
  out.data.assign(static_cast<std::size_t>(out.dims[0]) * out.dims[1] * out.dims[2], 0.0);
  const int u = axis == 0 ? 1 : 0;
  const int v = axis == 2 ? 1 : 2;
  const std::size_t in_stride = in.stride(axis);
  const std::size_t out_stride = out.stride(axis);
  const std::size_t lines = static_cast<std::size_t>(in.dims[u]) * in.dims[v];
  parallel_for(lines, [&](std::size_t line) {
    int c[3] = {0, 0, 0};
    c[u] = static_cast<int>(line % in.dims[u]);
    c[v] = static_cast<int>(line / in.dims[u]);
    std::size_t in_base = 0, out_base = 0;
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      in_base += c[a] * in.stride(a);
      out_base += c[a] * out.stride(a);
    }
    std::vector<double> src(in.dims[axis]), dst(out_len);
    for (int i = 0; i < in.dims[axis]; ++i) src[i] = in.data[in_base + i * in_stride];
    fn(src, dst);
    for (int i = 0; i < out_len; ++i) out.data[out_base + i * out_stride] = dst[i];
  });
  return out;
}

double linear_at(const std::vector<double>& line, double q) {
  const int n = static_cast<int>(line.size());
  q = std::clamp(q, 0.0, static_cast<double>(n - 1));
  const int i0 = std::min(static_cast<int>(std::floor(q)), n - 1);
  const double t = q - i0;
  if (t == 0.0 || i0 + 1 >= n) return line[i0];
  return line[i0] + t * (line[i0 + 1] - line[i0]);
}

// Low-resolution sample positions along one axis: `count` points at `step`
// voxel intervals, centred on the line.
struct Decimation {
  int count = 1;
  double step = 1.0;
  double offset = 0.0;
};

Decimation decimation(int n, double step) {
  Decimation d;
  d.step = step;
  d.count = static_cast<int>(std::floor((n - 1) / step + 1e-9)) + 1;
  d.offset = ((n - 1) - (d.count - 1) * step) / 2.0;
  return d;
}

}  // namespace

ScalarVolume simulate_acquisition(const ScalarVolume& vol, const AcquisitionParams& p, Rng& noise_rng) {
  if (!(p.spacing_mm >= 1.0 && p.spacing_mm <= 9.0)) {
    throw Error(ErrorCode::InvalidInput, "slice spacing must lie in [1, 9] mm");
  }
  if (!(p.thickness_mm >= 1.0 && p.thickness_mm <= std::min(5.0, p.spacing_mm))) {
    throw Error(ErrorCode::InvalidInput, "slice thickness must lie in [1, min(5, spacing)] mm");
  }
  if (!(p.noise_std >= 0.0) || !std::isfinite(p.noise_std)) {
    throw Error(ErrorCode::InvalidInput, "noise standard deviation must be non-negative");
  }
  const std::vector<int> axes = slice_axes(p.orientation);
  const Vec3& spacing = vol.geometry().spacing();
  Buffer buf{vol.dims(), vol.data()};
  std::vector<Decimation> plans;
  for (int axis : axes) {
    const std::vector<double> taps = gaussian_taps(p.thickness_mm / spacing[axis]);
    const int radius = static_cast<int>(taps.size() / 2);
    buf = map_lines(buf, axis, buf.dims[axis], [&](const std::vector<double>& src, std::vector<double>& dst) {
      const int n = static_cast<int>(src.size());
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int jj = std::clamp(j + i, 0, n - 1);
          acc += taps[i + radius] * (src[jj] - src[j]);
        }
        dst[j] = src[j] + acc;
      }
    });
    const Decimation d = decimation(buf.dims[axis], p.spacing_mm / spacing[axis]);
    plans.push_back(d);
    buf = map_lines(buf, axis, d.count, [&](const std::vector<double>& src, std::vector<double>& dst) {
      for (int m = 0; m < d.count; ++m) dst[m] = linear_at(src, d.offset + m * d.step);
    });
  }
  for (double& v : buf.data) v += p.noise_std * noise_rng.normal();
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const int axis = axes[a];
    const Decimation d = plans[a];
    buf = map_lines(buf, axis, vol.dims()[axis], [&](const std::vector<double>& src, std::vector<double>& dst) {
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = linear_at(src, (static_cast<double>(j) - d.offset) / d.step);
    });
  }
  return ScalarVolume(vol.geometry(), std::move(buf.data));
}

// ---------------------------------------------------------------- full chain

TrainingPair generate_training_pair(const LabelVolume& labels, const std::vector<ScalarVolume>& sdfs,
                                    const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(labels.geometry().spacing()[a] - 1.0) > 1e-6) {
      throw Error(ErrorCode::InvalidInput, "training pairs are generated from 1 mm isotropic inputs");
    }
  }
  Rng transform_rng = Rng::substream(seed, Stage::Transform);
  SpatialTransform phi = sample_transform(cfg, labels.geometry(), transform_rng);
  WarpedPair warped = warp_pair(labels, sdfs, phi);

  Rng intensity_rng = Rng::substream(seed, Stage::Intensities);
  ScalarVolume image = synth_intensities(warped.labels, cfg.gmm, intensity_rng);
  Rng bias_rng = Rng::substream(seed, Stage::Bias);
  image = apply_bias(image, cfg.bias, bias_rng);
  Rng acquisition_rng = Rng::substream(seed, Stage::Acquisition);
  const AcquisitionParams params = sample_acquisition(cfg, acquisition_rng);
  Rng noise_rng = Rng::substream(seed, Stage::Noise);
  image = simulate_acquisition(image, params, noise_rng);

  std::vector<ScalarVolume> targets;
  targets.reserve(warped.sdfs.size());
  for (const ScalarVolume& s : warped.sdfs) targets.push_back(clip_sdf(s, kDefaultClipMm));
  return {std::move(image), std::move(targets), std::move(phi), params};
}

}  // namespace cortexforge
