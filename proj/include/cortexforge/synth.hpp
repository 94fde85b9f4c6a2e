#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cortexforge/rng.hpp"
#include "cortexforge/volume.hpp"

namespace cortexforge {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

struct AffineSpec {
  std::array<Interval, 3> rotation_deg{};
  std::array<Interval, 3> translation_mm{};
  std::array<Interval, 3> scaling{{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}};
  /// Applied to each of the six off-diagonal entries.
  Interval shear{};

  void validate() const;
};

struct WarpSpec {
  double control_spacing_mm = 20.0;
  double std_mm = 0.0;

  void validate() const;
};

struct GmmEntry {
  std::uint16_t label = 0;
  Interval mean{};
  Interval std{};
};

struct GmmSpec {
  std::vector<GmmEntry> entries;

  const GmmEntry* find(std::uint16_t label) const;
  void validate() const;
};

enum class Orientation { Axial, Coronal, Sagittal, Isotropic };

std::string_view to_string(Orientation o);
Orientation parse_orientation(std::string_view name);
/// Affected axes: sagittal x, coronal y, axial z, isotropic all three.
std::vector<int> slice_axes(Orientation o);

struct AcquisitionSpec {
  /// Empty means one of the four orientations is drawn per sample.
  std::vector<Orientation> orientations;
  Interval spacing_mm{1.0, 9.0};
  double max_thickness_mm = 5.0;

  void validate() const;
};

struct BiasSpec {
  double control_spacing_mm = 40.0;
  /// Standard deviation of the log-space field, drawn per sample.
  Interval amplitude{0.0, 0.3};

  void validate() const;
};

struct SynthConfig {
  AffineSpec affine;
  WarpSpec warp;
  GmmSpec gmm;
  AcquisitionSpec acquisition;
  BiasSpec bias;
  Interval noise_std{0.0, 0.05};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parses the JSON schema shared with the CLI. Unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig load_synth_config(const std::string& path);

/// phi(x) = A (x + u(x)): the smooth displacement u first, the affine A second.
class SpatialTransform {
 public:
  SpatialTransform() : affine_(Mat4::Identity()) {}
  SpatialTransform(Mat4 affine, std::vector<ScalarVolume> displacement);

  static SpatialTransform identity() { return {}; }

  Vec3 operator()(const Vec3& x) const { return apply_affine(nonlinear(x)); }
  Vec3 nonlinear(const Vec3& x) const { return x + displacement(x); }
  Vec3 apply_affine(const Vec3& x) const;
  /// u(x), trilinear from the coarse control grid; zero when there is none.
  Vec3 displacement(const Vec3& x) const;

  const Mat4& affine() const { return affine_; }
  /// Three coarse component volumes, or none.
  const std::vector<ScalarVolume>& control_field() const { return control_; }
  bool is_identity() const;

 private:
  Mat4 affine_;
  std::vector<ScalarVolume> control_;
};

/// Coarse control lattice aligned with `fine`, covering it with the given spacing in mm.
GridGeometry control_grid(const GridGeometry& fine, double spacing_mm);

/// Draws an affine about the grid centre and a Gaussian control field.
SpatialTransform sample_transform(const SynthConfig& cfg, const GridGeometry& grid, Rng& rng);

/// Dense displacement upsampled onto `grid`, one volume per component.
std::array<ScalarVolume, 3> dense_displacement(const SpatialTransform& phi, const GridGeometry& grid);

struct WarpedPair {
  LabelVolume labels;
  std::vector<ScalarVolume> sdfs;
};

/// Backward warp: each output voxel at x pulls from phi(x), border clamped.
WarpedPair warp_pair(const LabelVolume& labels, const std::vector<ScalarVolume>& sdfs,
                     const SpatialTransform& phi);

/// One (mean, std) per GMM entry, then i.i.d. voxel draws, min-max normalised.
ScalarVolume synth_intensities(const LabelVolume& labels, const GmmSpec& gmm, Rng& rng);

/// Coarse log-space bias control values for `fine`, drawn with a sampled amplitude.
ScalarVolume sample_bias_field(const GridGeometry& fine, const BiasSpec& spec, Rng& rng);

/// Trilinear upsampling of a coarse field onto `fine`.
ScalarVolume upsample_field(const ScalarVolume& coarse, const GridGeometry& fine);

/// exp(B) multiplicative field from a coarse Gaussian control grid, then
/// divided by the maximum so the result lies in [0, 1].
ScalarVolume apply_bias(const ScalarVolume& vol, const BiasSpec& spec, Rng& rng);

struct AcquisitionParams {
  Orientation orientation = Orientation::Axial;
  double spacing_mm = 1.0;
  double thickness_mm = 1.0;
  double noise_std = 0.0;
};

AcquisitionParams sample_acquisition(const SynthConfig& cfg, Rng& rng);

/// sigma = fwhm / (2 sqrt(2 ln 2)); taps at -ceil(3 sigma)..ceil(3 sigma), unit sum.
std::vector<double> gaussian_taps(double fwhm_vox);

/// Slice-axis blur, decimation, noise on the low-resolution grid, and linear
/// upsampling back to the input lattice.
ScalarVolume simulate_acquisition(const ScalarVolume& vol, const AcquisitionParams& params, Rng& noise_rng);

struct TrainingPair {
  ScalarVolume image;
  std::vector<ScalarVolume> targets;
  SpatialTransform transform;
  AcquisitionParams acquisition;
};

/// Every stage draws from its own substream of `seed`.
TrainingPair generate_training_pair(const LabelVolume& labels, const std::vector<ScalarVolume>& sdfs,
                                    const SynthConfig& cfg, std::uint64_t seed);

}  // namespace cortexforge
