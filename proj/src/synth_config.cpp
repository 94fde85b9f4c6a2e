#include <cmath>
#include <fstream>
#include <set>

#include "cortexforge/error.hpp"
#include "cortexforge/synth.hpp"

namespace cortexforge {

using nlohmann::json;

namespace {

void require_interval(const Interval& iv, const std::string& what) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
    throw Error(ErrorCode::InvalidInput, what + " must be a finite interval with lo <= hi");
  }
}

// Rejects keys outside `allowed`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::InvalidInput, "unknown key '" + key + "' in " + where);
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::InvalidInput, where + " must be a number");
  return j.get<double>();
}

Interval interval(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::InvalidInput, where + " must be [lo, hi]");
  Interval iv{number(j[0], where), number(j[1], where)};
  require_interval(iv, where);
  return iv;
}

std::array<Interval, 3> interval3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidInput, where + " must list three [lo, hi] intervals");
  }
  return {interval(j[0], where), interval(j[1], where), interval(j[2], where)};
}

json to_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

json to_json(const std::array<Interval, 3>& ivs) {
  return json::array({to_json(ivs[0]), to_json(ivs[1]), to_json(ivs[2])});
}

}  // namespace

void AffineSpec::validate() const {
  for (const auto& iv : rotation_deg) require_interval(iv, "rotation range");
  for (const auto& iv : translation_mm) require_interval(iv, "translation range");
  for (const auto& iv : scaling) {
    require_interval(iv, "scaling range");
    if (iv.contains(0.0)) throw Error(ErrorCode::InvalidInput, "scaling range must exclude 0");
  }
  require_interval(shear, "shear range");
}

void WarpSpec::validate() const {
  if (!(control_spacing_mm > 0.0) || !std::isfinite(control_spacing_mm)) {
    throw Error(ErrorCode::InvalidInput, "warp control spacing must be positive");
  }
  if (!(std_mm >= 0.0) || !std::isfinite(std_mm)) {
    throw Error(ErrorCode::InvalidInput, "warp standard deviation must be non-negative");
  }
}

const GmmEntry* GmmSpec::find(std::uint16_t label) const {
  for (const GmmEntry& e : entries) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

void GmmSpec::validate() const {
  std::set<std::uint16_t> seen;
  for (const GmmEntry& e : entries) {
    if (!seen.insert(e.label).second) {
      throw Error(ErrorCode::InvalidInput, "duplicate GMM entry for label " + std::to_string(e.label));
    }
    require_interval(e.mean, "GMM mean interval");
    require_interval(e.std, "GMM std interval");
    if (e.std.lo < 0.0) throw Error(ErrorCode::InvalidInput, "GMM std interval must be non-negative");
  }
}

void AcquisitionSpec::validate() const {
  require_interval(spacing_mm, "slice spacing interval");
  if (spacing_mm.lo < 1.0 || spacing_mm.hi > 9.0) {
    throw Error(ErrorCode::InvalidInput, "slice spacing interval must lie within [1, 9] mm");
  }
  if (!(max_thickness_mm >= 1.0 && max_thickness_mm <= 5.0)) {
    throw Error(ErrorCode::InvalidInput, "maximum slice thickness must lie within [1, 5] mm");
  }
}

void BiasSpec::validate() const {
  if (!(control_spacing_mm > 0.0) || !std::isfinite(control_spacing_mm)) {
    throw Error(ErrorCode::InvalidInput, "bias control spacing must be positive");
  }
  require_interval(amplitude, "bias amplitude interval");
  if (amplitude.lo < 0.0) throw Error(ErrorCode::InvalidInput, "bias amplitude must be non-negative");
}

void SynthConfig::validate() const {
  affine.validate();
  warp.validate();
  gmm.validate();
  acquisition.validate();
  bias.validate();
  require_interval(noise_std, "noise std interval");
  if (noise_std.lo < 0.0) throw Error(ErrorCode::InvalidInput, "noise std must be non-negative");
}

SynthConfig synth_config_from_json(const json& j) {
  check_keys(j, {"affine", "warp", "gmm", "acquisition", "bias", "noise_std", "seed"}, "synth config");
  SynthConfig cfg;
  if (j.contains("affine")) {
    const json& a = j["affine"];
    check_keys(a, {"rotation_deg", "translation_mm", "scaling", "shear"}, "affine");
    if (a.contains("rotation_deg")) cfg.affine.rotation_deg = interval3(a["rotation_deg"], "affine.rotation_deg");
    if (a.contains("translation_mm")) {
      cfg.affine.translation_mm = interval3(a["translation_mm"], "affine.translation_mm");
    }
    if (a.contains("scaling")) cfg.affine.scaling = interval3(a["scaling"], "affine.scaling");
    if (a.contains("shear")) cfg.affine.shear = interval(a["shear"], "affine.shear");
  }
  if (j.contains("warp")) {
    const json& w = j["warp"];
    check_keys(w, {"control_spacing_mm", "std_mm"}, "warp");
    if (w.contains("control_spacing_mm")) {
      cfg.warp.control_spacing_mm = number(w["control_spacing_mm"], "warp.control_spacing_mm");
    }
    if (w.contains("std_mm")) cfg.warp.std_mm = number(w["std_mm"], "warp.std_mm");
  }
  if (j.contains("gmm")) {
    const json& g = j["gmm"];
    if (!g.is_array()) throw Error(ErrorCode::InvalidInput, "gmm must be a list of label entries");
    for (const json& e : g) {
      check_keys(e, {"label", "mean", "std"}, "gmm entry");
      if (!e.contains("label") || !e.contains("mean") || !e.contains("std")) {
        throw Error(ErrorCode::InvalidInput, "gmm entries need label, mean and std");
      }
      if (!e["label"].is_number_unsigned() || e["label"].get<std::uint64_t>() > 65535) {
        throw Error(ErrorCode::InvalidInput, "gmm label must be an integer in [0, 65535]");
      }
      cfg.gmm.entries.push_back({static_cast<std::uint16_t>(e["label"].get<std::uint64_t>()),
                                 interval(e["mean"], "gmm.mean"), interval(e["std"], "gmm.std")});
    }
  }
  if (j.contains("acquisition")) {
    const json& a = j["acquisition"];
    check_keys(a, {"orientations", "spacing_mm", "max_thickness_mm"}, "acquisition");
    if (a.contains("orientations")) {
      if (!a["orientations"].is_array()) {
        throw Error(ErrorCode::InvalidInput, "acquisition.orientations must be a list");
      }
      for (const json& o : a["orientations"]) {
        if (!o.is_string()) throw Error(ErrorCode::InvalidInput, "orientation names must be strings");
        cfg.acquisition.orientations.push_back(parse_orientation(o.get<std::string>()));
      }
    }
    if (a.contains("spacing_mm")) cfg.acquisition.spacing_mm = interval(a["spacing_mm"], "acquisition.spacing_mm");
    if (a.contains("max_thickness_mm")) {
      cfg.acquisition.max_thickness_mm = number(a["max_thickness_mm"], "acquisition.max_thickness_mm");
    }
  }
  if (j.contains("bias")) {
    const json& b = j["bias"];
    check_keys(b, {"control_spacing_mm", "amplitude"}, "bias");
    if (b.contains("control_spacing_mm")) {
      cfg.bias.control_spacing_mm = number(b["control_spacing_mm"], "bias.control_spacing_mm");
    }
    if (b.contains("amplitude")) cfg.bias.amplitude = interval(b["amplitude"], "bias.amplitude");
  }
  if (j.contains("noise_std")) cfg.noise_std = interval(j["noise_std"], "noise_std");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw Error(ErrorCode::InvalidInput, "seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.validate();
  return cfg;
}

json to_json(const SynthConfig& cfg) {
  json gmm = json::array();
  for (const GmmEntry& e : cfg.gmm.entries) {
    gmm.push_back({{"label", e.label}, {"mean", to_json(e.mean)}, {"std", to_json(e.std)}});
  }
  json orientations = json::array();
  for (Orientation o : cfg.acquisition.orientations) orientations.push_back(std::string(to_string(o)));
  return {
      {"affine",
       {{"rotation_deg", to_json(cfg.affine.rotation_deg)},
        {"translation_mm", to_json(cfg.affine.translation_mm)},
        {"scaling", to_json(cfg.affine.scaling)},
        {"shear", to_json(cfg.affine.shear)}}},
      {"warp", {{"control_spacing_mm", cfg.warp.control_spacing_mm}, {"std_mm", cfg.warp.std_mm}}},
      {"gmm", gmm},
      {"acquisition",
       {{"orientations", orientations},
        {"spacing_mm", to_json(cfg.acquisition.spacing_mm)},
        {"max_thickness_mm", cfg.acquisition.max_thickness_mm}}},
      {"bias", {{"control_spacing_mm", cfg.bias.control_spacing_mm}, {"amplitude", to_json(cfg.bias.amplitude)}}},
      {"noise_std", to_json(cfg.noise_std)},
      {"seed", cfg.seed},
  };
}

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, "malformed JSON in " + path + ": " + e.what());
  }
  return synth_config_from_json(j);
}

}  // namespace cortexforge
