#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cortexforge/deform.hpp"
#include "cortexforge/error.hpp"
#include "cortexforge/mesh.hpp"
#include "cortexforge/metrics.hpp"
#include "cortexforge/sdf.hpp"

namespace cortexforge {

struct PipelineConfig {
  DeformConfig deform;
  int smooth_iterations = 10;
  int inflation_iterations = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);
nlohmann::json to_json(const DeformConfig& cfg);
DeformConfig deform_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::string& path);

/// Lower-case hex SHA-256 of the JSON serialised with sorted keys.
std::string config_hash(const nlohmann::json& config);

struct PipelineManifest {
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> stage_ms;
  nlohmann::json metrics = nlohmann::json::object();

  nlohmann::json to_json(bool include_timings = true) const;
};

struct PipelineResult {
  TriangleMesh wm;
  TriangleMesh pial;
  FitResult wm_fit;
  FitResult pial_fit;
  SurfaceScalars thickness;
  SurfaceScalars curvature;
  SurfaceScalars sulcal_depth;
  PipelineManifest manifest;
};

/// A stage failure. Carries the stage name and every mesh finished before it.
class StageError : public Error {
 public:
  StageError(ErrorCode code, std::string stage, const std::string& message,
             std::vector<std::pair<std::string, TriangleMesh>> partial)
      : Error(code, message), stage_(std::move(stage)), partial_(std::move(partial)) {}

  const std::string& stage() const { return stage_; }
  const std::vector<std::pair<std::string, TriangleMesh>>& partial() const { return partial_; }
  /// Set when the topology repair gave up.
  std::optional<long> final_euler;

 private:
  std::string stage_;
  std::vector<std::pair<std::string, TriangleMesh>> partial_;
};

/// Genus-zero repair, tessellation, smoothing, white and pial fits, metrics.
PipelineResult run_pipeline(const SdfVolume& wm_sdf, const SdfVolume& pial_sdf, const LabelVolume& wm_mask,
                            const PipelineConfig& config);

}  // namespace cortexforge
