#include "cortexforge/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

namespace cortexforge {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::InvalidInput, "unknown key '" + key + "' in " + where);
  }
}

double read_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw Error(ErrorCode::InvalidInput, std::string(key) + " must be a number");
  return j[key].get<double>();
}

int read_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw Error(ErrorCode::InvalidInput, std::string(key) + " must be an integer");
  return j[key].get<int>();
}

}  // namespace

void PipelineConfig::validate() const {
  deform.validate();
  if (smooth_iterations < 0) throw Error(ErrorCode::InvalidInput, "smooth_iterations must be non-negative");
  if (inflation_iterations < 1) throw Error(ErrorCode::InvalidInput, "inflation_iterations must be positive");
}

DeformConfig deform_config_from_json(const json& j) {
  check_keys(j,
             {"lambda_normal", "lambda_tangential", "step", "max_iterations", "convergence_rel",
              "convergence_window", "displacement_tol", "shrink", "min_step", "grow", "max_step"},
             "deform config");
  DeformConfig c;
  c.lambda_normal = read_number(j, "lambda_normal", c.lambda_normal);
  c.lambda_tangential = read_number(j, "lambda_tangential", c.lambda_tangential);
  c.step = read_number(j, "step", c.step);
  c.max_iterations = read_int(j, "max_iterations", c.max_iterations);
  c.convergence_rel = read_number(j, "convergence_rel", c.convergence_rel);
  c.convergence_window = read_int(j, "convergence_window", c.convergence_window);
  c.displacement_tol = read_number(j, "displacement_tol", c.displacement_tol);
  c.shrink = read_number(j, "shrink", c.shrink);
  c.min_step = read_number(j, "min_step", c.min_step);
  c.grow = read_number(j, "grow", c.grow);
  c.max_step = read_number(j, "max_step", c.max_step);
  c.validate();
  return c;
}

json to_json(const DeformConfig& c) {
  return {{"lambda_normal", c.lambda_normal},       {"lambda_tangential", c.lambda_tangential},
          {"step", c.step},                         {"max_iterations", c.max_iterations},
          {"convergence_rel", c.convergence_rel},   {"convergence_window", c.convergence_window},
          {"displacement_tol", c.displacement_tol}, {"shrink", c.shrink},
          {"min_step", c.min_step},                 {"grow", c.grow},
          {"max_step", c.max_step}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  check_keys(j, {"deform", "smooth_iterations", "inflation_iterations", "seed"}, "pipeline config");
  PipelineConfig c;
  if (j.contains("deform")) c.deform = deform_config_from_json(j["deform"]);
  c.smooth_iterations = read_int(j, "smooth_iterations", c.smooth_iterations);
  c.inflation_iterations = read_int(j, "inflation_iterations", c.inflation_iterations);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw Error(ErrorCode::InvalidInput, "seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.validate();
  return c;
}

json to_json(const PipelineConfig& c) {
  return {{"deform", to_json(c.deform)},
          {"smooth_iterations", c.smooth_iterations},
          {"inflation_iterations", c.inflation_iterations},
          {"seed", c.seed}};
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, "malformed JSON in " + path + ": " + e.what());
  }
  return pipeline_config_from_json(j);
}

std::string config_hash(const json& config) {
  // nlohmann::json objects are std::map backed, so dump() emits sorted keys.
  const std::string canonical = config.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

json PipelineManifest::to_json(bool include_timings) const {
  json j = {{"inputs", inputs},
            {"outputs", outputs},
            {"config_hash", config_hash},
            {"seed", seed},
            {"metrics", metrics}};
  if (include_timings) {
    json t = json::object();
    for (const auto& [stage, ms] : stage_ms) t[stage] = ms;
    j["stage_timings_ms"] = t;
  }
  return j;
}

namespace {

class StageClock {
 public:
  explicit StageClock(PipelineManifest& m) : manifest_(m), start_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    manifest_.stage_ms.emplace_back(stage, std::chrono::duration<double, std::milli>(now - start_).count());
    start_ = now;
  }

 private:
  PipelineManifest& manifest_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

PipelineResult run_pipeline(const SdfVolume& wm_sdf, const SdfVolume& pial_sdf, const LabelVolume& wm_mask,
                            const PipelineConfig& config) {
  config.validate();
  std::vector<std::pair<std::string, TriangleMesh>> partial;
  std::string stage = "ingest";
  PipelineManifest manifest;
  manifest.config_hash = config_hash(to_json(config));
  manifest.seed = config.seed;
  StageClock clock(manifest);
  try {
    require_same_geometry(wm_sdf.geometry(), pial_sdf.geometry());
    require_same_geometry(wm_sdf.geometry(), wm_mask.geometry());

    stage = "topology";
    GenusZeroResult repaired = ensure_genus_zero(wm_mask);
    clock.lap(stage);
    partial.emplace_back("tessellation", repaired.mesh);

    stage = "smooth";
    TriangleMesh init = repaired.mesh;
    bool smoothed = false;
    if (config.smooth_iterations > 0) {
      TriangleMesh candidate = smooth(repaired.mesh, config.smooth_iterations);
      if (self_intersections(candidate).empty()) {
        init = std::move(candidate);
        smoothed = true;
      }
    }
    clock.lap(stage);

    stage = "fit_wm";
    FitResult wm_fit = fit_surface(init, wm_sdf, config.deform);
    clock.lap(stage);
    partial.emplace_back("wm", wm_fit.mesh);

    stage = "fit_pial";
    FitResult pial_fit = fit_pial(wm_fit.mesh, pial_sdf, config.deform);
    clock.lap(stage);
    partial.emplace_back("pial", pial_fit.mesh);

    stage = "metrics";
    SurfaceScalars thick = thickness(wm_fit.mesh, pial_fit.mesh);
    SurfaceScalars curv = curvature(wm_fit.mesh);
    const InflationResult inflated = inflate(wm_fit.mesh, config.inflation_iterations);
    SurfaceScalars depth = sulcal_depth(wm_fit.mesh, inflated.displacement);
    const std::size_t wm_selfx = self_intersections(wm_fit.mesh).size();
    const std::size_t pial_selfx = self_intersections(pial_fit.mesh).size();
    clock.lap(stage);

    manifest.metrics = {
        {"repair_rounds", repaired.rounds},
        {"initial_smoothing_applied", smoothed},
        {"wm_vertices", wm_fit.mesh.vertex_count()},
        {"wm_triangles", wm_fit.mesh.triangle_count()},
        {"wm_euler", euler_characteristic(wm_fit.mesh)},
        {"pial_euler", euler_characteristic(pial_fit.mesh)},
        {"wm_self_intersections", wm_selfx},
        {"pial_self_intersections", pial_selfx},
        {"wm_iterations", wm_fit.trace.empty() ? 0 : wm_fit.trace.back().iteration},
        {"pial_iterations", pial_fit.trace.empty() ? 0 : pial_fit.trace.back().iteration},
        {"wm_stop_reason", wm_fit.stop_reason},
        {"pial_stop_reason", pial_fit.stop_reason},
        {"wm_frozen_vertices", wm_fit.frozen_vertices},
        {"pial_frozen_vertices", pial_fit.frozen_vertices},
        {"thickness_mean_mm", thick.mean()},
        {"thickness_std_mm", thick.stddev()},
        {"curvature_mean", curv.mean()},
        {"depth_std", depth.stddev()},
    };
    PipelineResult result{wm_fit.mesh, pial_fit.mesh, std::move(wm_fit), std::move(pial_fit),
                          std::move(thick), std::move(curv), std::move(depth), std::move(manifest)};
    return result;
  } catch (const FitStalledError& e) {
    partial.emplace_back(stage == "fit_wm" ? "wm" : "pial", e.partial().mesh);
    throw StageError(e.code(), stage, stage + ": " + e.what(), std::move(partial));
  } catch (const TopologyRepairError& e) {
    StageError err(e.code(), stage, stage + ": " + e.what(), std::move(partial));
    err.final_euler = e.final_euler();
    throw err;
  } catch (const Error& e) {
    throw StageError(e.code(), stage, stage + ": " + e.what(), std::move(partial));
  }
}

}  // namespace cortexforge
