// cortexforge command-line tool: phantoms, synthetic training pairs, SDF
// conversion, surface reconstruction, metrics and mesh utilities.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cortexforge/error.hpp"
#include "cortexforge/mesh.hpp"
#include "cortexforge/mesh_io.hpp"
#include "cortexforge/metrics.hpp"
#include "cortexforge/nifti.hpp"
#include "cortexforge/parallel.hpp"
#include "cortexforge/phantom.hpp"
#include "cortexforge/pipeline.hpp"
#include "cortexforge/sdf.hpp"
#include "cortexforge/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cortexforge;

namespace {

constexpr int kInternalFailure = 1;

json error_json(const Error& e) {
  json j = {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (const auto* stage = dynamic_cast<const StageError*>(&e)) {
    j["stage"] = stage->stage();
    if (stage->final_euler) j["final_euler"] = *stage->final_euler;
  }
  if (const auto* topo = dynamic_cast<const TopologyRepairError*>(&e)) j["final_euler"] = topo->final_euler();
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("CORTEXFORGE_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used, 10);
    if (used != std::string(s).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, "CORTEXFORGE_SEED must be a non-negative integer");
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_trace(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.precision(17);
  out << "iteration,step,fidelity,normal,tangential,total,intersections_found\n";
  for (const TraceRow& r : trace) {
    out << r.iteration << ',' << r.step << ',' << r.energy.fidelity << ',' << r.energy.normal << ','
        << r.energy.tangential << ',' << r.energy.total << ',' << r.intersections_found << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

fs::path partial_path(const fs::path& out, const std::string& what) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + "." + what + ".partial" + out.extension().string());
  return p;
}

// ------------------------------------------------------------------ phantom

struct PhantomArgs {
  std::string kind = "sphere";
  PhantomParams params;
  std::string out_labels;
  std::string out_mask;
  std::vector<std::string> out_sdf;
  std::vector<std::string> out_mesh;
};

void run_phantom(const PhantomArgs& a) {
  const Phantom ph = make_phantom(parse_phantom_kind(a.kind), a.params);
  if (a.out_sdf.size() > ph.sdfs.size() || a.out_mesh.size() > ph.meshes.size()) {
    throw Error(ErrorCode::InvalidInput, "phantom '" + a.kind + "' has " + std::to_string(ph.sdfs.size()) +
                                             " surface(s); too many outputs requested");
  }
  if (!a.out_labels.empty()) nifti::write(a.out_labels, ph.labels);
  if (!a.out_mask.empty()) nifti::write(a.out_mask, select_labels(ph.labels, {1}));
  for (std::size_t i = 0; i < a.out_sdf.size(); ++i) nifti::write(a.out_sdf[i], ph.sdfs[i]);
  for (std::size_t i = 0; i < a.out_mesh.size(); ++i) io::write_mesh(a.out_mesh[i], ph.meshes[i]);
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
  std::string labels;
  std::vector<std::string> sdfs;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_image;
  std::vector<std::string> out_targets;
  std::string out_params;
};

void run_synth(const SynthArgs& a) {
  if (a.out_targets.size() != a.sdfs.size()) {
    throw Error(ErrorCode::InvalidInput, "need one --out-target per --sdf");
  }
  SynthConfig cfg = load_synth_config(a.config);
  if (const auto s = env_seed()) cfg.seed = *s;
  if (a.seed) cfg.seed = *a.seed;
  const LabelVolume labels = nifti::read_labels(a.labels);
  std::vector<ScalarVolume> sdfs;
  for (const std::string& p : a.sdfs) sdfs.push_back(nifti::read_scalar(p));
  const TrainingPair pair = generate_training_pair(labels, sdfs, cfg, cfg.seed);
  nifti::write(a.out_image, pair.image);
  for (std::size_t i = 0; i < pair.targets.size(); ++i) nifti::write(a.out_targets[i], pair.targets[i]);
  if (!a.out_params.empty()) {
    json affine = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) affine.push_back(pair.transform.affine()(r, c));
    write_json(a.out_params, {{"seed", cfg.seed},
                              {"affine", affine},
                              {"orientation", std::string(to_string(pair.acquisition.orientation))},
                              {"spacing_mm", pair.acquisition.spacing_mm},
                              {"thickness_mm", pair.acquisition.thickness_mm},
                              {"noise_std", pair.acquisition.noise_std}});
  }
}

// ---------------------------------------------------------------------- sdf

struct SdfArgs {
  std::string mesh;
  std::string like;
  double clip = kDefaultClipMm;
  std::string out;
};

void run_sdf(const SdfArgs& a) {
  const TriangleMesh mesh = io::read_mesh(a.mesh);
  const ScalarVolume like = nifti::read_scalar(a.like);
  SdfVolume sdf = mesh_to_sdf(mesh, like.geometry());
  if (a.clip > 0.0) sdf = clip_sdf(sdf, a.clip);
  nifti::write(a.out, sdf);
}

// --------------------------------------------------------------------- loss

struct LossArgs {
  std::string prediction;
  std::string target;
  std::string kind = "l2";
  double delta = 1.0;
};

void run_loss(const LossArgs& a) {
  const LossSpec spec{parse_loss_kind(a.kind), a.delta};
  const LossValue v = sdf_loss(nifti::read_scalar(a.prediction), nifti::read_scalar(a.target), spec);
  std::cout << json{{"kind", std::string(to_string(spec.kind))}, {"sum", v.sum}, {"mean", v.mean}}.dump() << "\n";
}

// -------------------------------------------------------------------- recon

struct Subject {
  std::string wm_sdf;
  std::string pial_sdf;
  std::string wm_mask;
  std::string out_wm;
  std::string out_pial;
  std::string trace;
  std::string pial_trace;
  std::string manifest;
};

Subject subject_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "subject entries must be objects");
  Subject s;
  const std::pair<const char*, std::string*> fields[] = {
      {"wm_sdf", &s.wm_sdf},     {"pial_sdf", &s.pial_sdf}, {"wm_mask", &s.wm_mask},
      {"out_wm", &s.out_wm},     {"out_pial", &s.out_pial}, {"trace", &s.trace},
      {"pial_trace", &s.pial_trace}, {"manifest", &s.manifest}};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& f : fields) {
      if (key != f.first) continue;
      if (!value.is_string()) throw Error(ErrorCode::InvalidInput, "subject field " + key + " must be a string");
      *f.second = value.get<std::string>();
      known = true;
    }
    if (!known) throw Error(ErrorCode::InvalidInput, "unknown key '" + key + "' in subject entry");
  }
  if (s.wm_sdf.empty() || s.pial_sdf.empty() || s.wm_mask.empty() || s.out_wm.empty() || s.out_pial.empty()) {
    throw Error(ErrorCode::InvalidInput, "subject entries need wm_sdf, pial_sdf, wm_mask, out_wm and out_pial");
  }
  return s;
}

void reconstruct(const Subject& s, const PipelineConfig& cfg) {
  const SdfVolume wm_sdf = nifti::read_scalar(s.wm_sdf);
  const SdfVolume pial_sdf = nifti::read_scalar(s.pial_sdf);
  const LabelVolume mask = nifti::read_labels(s.wm_mask);
  PipelineResult r = [&] {
    try {
      return run_pipeline(wm_sdf, pial_sdf, mask, cfg);
    } catch (const StageError& e) {
      for (const auto& [name, mesh] : e.partial()) {
        io::write_mesh(partial_path(name == "pial" ? s.out_pial : s.out_wm, name), mesh);
      }
      throw;
    }
  }();
  const std::vector<io::VertexProperty> props = {{"thickness", r.thickness.values},
                                                 {"curv", r.curvature.values},
                                                 {"sulc", r.sulcal_depth.values}};
  if (fs::path(s.out_wm).extension() == ".ply") {
    io::write_ply(s.out_wm, r.wm, props);
  } else {
    io::write_mesh(s.out_wm, r.wm);
  }
  io::write_mesh(s.out_pial, r.pial);
  if (!s.trace.empty()) write_trace(s.trace, r.wm_fit.trace);
  if (!s.pial_trace.empty()) write_trace(s.pial_trace, r.pial_fit.trace);
  r.manifest.inputs = {{"wm_sdf", s.wm_sdf}, {"pial_sdf", s.pial_sdf}, {"wm_mask", s.wm_mask}};
  r.manifest.outputs = {{"wm", s.out_wm}, {"pial", s.out_pial}};
  if (!s.trace.empty()) r.manifest.outputs["trace"] = s.trace;
  if (!s.pial_trace.empty()) r.manifest.outputs["pial_trace"] = s.pial_trace;
  if (!s.manifest.empty()) write_json(s.manifest, r.manifest.to_json());
}

struct ReconArgs {
  Subject subject;
  std::string config;
  std::string subjects;
  unsigned jobs = 1;
};

int run_recon(const ReconArgs& a) {
  PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : load_pipeline_config(a.config);
  if (const auto s = env_seed()) cfg.seed = *s;
  if (a.subjects.empty()) {
    reconstruct(a.subject, cfg);
    return 0;
  }
  const json list = read_json_file(a.subjects);
  if (!list.is_array()) throw Error(ErrorCode::InvalidInput, "subjects file must hold a JSON list");
  std::vector<Subject> subjects;
  for (const json& j : list) subjects.push_back(subject_from_json(j));

  const unsigned workers = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(subjects.size())));
  if (workers > 1) set_thread_count(1);
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  std::vector<int> codes(subjects.size(), 0);
  auto work = [&] {
    for (std::size_t i = next++; i < subjects.size(); i = next++) {
      try {
        reconstruct(subjects[i], cfg);
      } catch (const Error& e) {
        codes[i] = exit_code_for(e.code());
        json j = error_json(e);
        j["subject"] = i;
        std::lock_guard lock(report_mutex);
        std::cerr << j.dump() << "\n";
      } catch (const std::exception& e) {
        codes[i] = kInternalFailure;
        std::lock_guard lock(report_mutex);
        std::cerr << json{{"error", "internal"}, {"message", e.what()}, {"subject", i}}.dump() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (int c : codes) {
    if (c != 0) return c;
  }
  return 0;
}

// ------------------------------------------------------------------ metrics

struct MetricsArgs {
  std::string wm;
  std::string pial;
  std::string reference;
  std::string out_scalars;
  int inflation_iterations = 100;
};

void run_metrics(const MetricsArgs& a) {
  const TriangleMesh wm = io::read_mesh(a.wm);
  json j = {{"aad_mm", nullptr},           {"hd90_mm", nullptr},        {"thickness_mean_mm", nullptr},
            {"thickness_std_mm", nullptr}, {"curvature_mean", nullptr}, {"depth_std", nullptr}};
  std::vector<io::VertexProperty> props;
  if (!a.reference.empty()) {
    const DistanceReport d = surface_distance(wm, io::read_mesh(a.reference));
    j["aad_mm"] = d.aad;
    j["hd90_mm"] = d.hd90;
  }
  if (!a.pial.empty()) {
    const SurfaceScalars t = thickness(wm, io::read_mesh(a.pial));
    j["thickness_mean_mm"] = t.mean();
    j["thickness_std_mm"] = t.stddev();
    props.push_back({"thickness", t.values});
  }
  const SurfaceScalars curv = curvature(wm);
  j["curvature_mean"] = curv.mean();
  props.push_back({"curv", curv.values});
  const SurfaceScalars depth = sulcal_depth(wm, inflate(wm, a.inflation_iterations).displacement);
  j["depth_std"] = depth.stddev();
  props.push_back({"sulc", depth.values});
  if (!a.out_scalars.empty()) io::write_ply(a.out_scalars, wm, props);
  std::cout << j.dump() << "\n";
}

// --------------------------------------------------------------------- mesh

struct MeshArgs {
  std::string in;
  std::string out;
  int iterations = 10;
  double lambda = 0.5;
  double mu = -0.53;
  double step = 0.5;
};

void run_mesh_euler(const MeshArgs& a) {
  const TriangleMesh m = io::read_mesh(a.in);
  const ManifoldReport r = inspect_manifold(m);
  std::cout << json{{"euler", euler_characteristic(m)},
                    {"vertices", m.vertex_count()},
                    {"edges", unique_edges(m).size()},
                    {"faces", m.triangle_count()},
                    {"components", r.components},
                    {"closed_genus_zero", r.closed_genus_zero()}}
                   .dump()
            << "\n";
}

void run_mesh_selfx(const MeshArgs& a) {
  const auto pairs = self_intersections(io::read_mesh(a.in));
  json p = json::array();
  for (const auto& [i, j] : pairs) p.push_back({i, j});
  std::cout << json{{"count", pairs.size()}, {"pairs", p}}.dump() << "\n";
}

void run_mesh_smooth(const MeshArgs& a) {
  io::write_mesh(a.out, smooth(io::read_mesh(a.in), a.iterations, a.lambda, a.mu));
}

void run_mesh_inflate(const MeshArgs& a) {
  const InflationResult r = inflate(io::read_mesh(a.in), a.iterations, a.step);
  if (fs::path(a.out).extension() == ".ply") {
    io::write_ply(a.out, r.mesh, {{"displacement", r.displacement}});
  } else {
    io::write_mesh(a.out, r.mesh);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cortexforge: synthetic MRI generation and SDF-based cortical surface reconstruction"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads inside one job (0 = all cores)");

  PhantomArgs phantom;
  auto* ph = app.add_subcommand("phantom", "Write an analytic phantom (labels, SDFs, reference meshes)");
  ph->add_option("--kind", phantom.kind, "sphere | concentric | folded")->capture_default_str();
  ph->add_option("--size", phantom.params.size, "Voxels per axis")->capture_default_str();
  ph->add_option("--spacing", phantom.params.spacing, "Voxel size in mm")->capture_default_str();
  ph->add_option("--radius", phantom.params.radius, "Sphere or inner radius in mm")->capture_default_str();
  ph->add_option("--outer-radius", phantom.params.outer_radius, "Concentric outer radius in mm")->capture_default_str();
  ph->add_option("--amplitude", phantom.params.fold_amplitude, "Fold amplitude in mm")->capture_default_str();
  ph->add_option("--frequency", phantom.params.fold_frequency, "Fold frequency")->capture_default_str();
  ph->add_option("--subdivisions", phantom.params.subdivisions, "Reference icosphere level")->capture_default_str();
  ph->add_option("--out-labels", phantom.out_labels, "Label map (NIfTI)");
  ph->add_option("--out-mask", phantom.out_mask, "Binary mask of label 1 (NIfTI)");
  ph->add_option("--out-sdf", phantom.out_sdf, "SDF per surface, inner first (NIfTI)");
  ph->add_option("--out-mesh", phantom.out_mesh, "Reference mesh per surface, inner first (OBJ/PLY)");

  SynthArgs synth;
  std::uint64_t synth_seed = 0;
  auto* sy = app.add_subcommand("synth", "Generate one synthetic image and its SDF targets");
  sy->add_option("--labels", synth.labels, "Label map (NIfTI)")->required();
  sy->add_option("--sdf", synth.sdfs, "Ground-truth SDF (NIfTI), repeatable")->required();
  sy->add_option("--config", synth.config, "Synth config (JSON)")->required();
  auto* seed_opt = sy->add_option("--seed", synth_seed, "Seed; overrides config and CORTEXFORGE_SEED");
  sy->add_option("--out-image", synth.out_image, "Synthetic image (NIfTI)")->required();
  sy->add_option("--out-target", synth.out_targets, "Clipped warped SDF per input SDF (NIfTI)")->required();
  sy->add_option("--out-params", synth.out_params, "Sampled parameters (JSON)");

  SdfArgs sdf;
  auto* sd = app.add_subcommand("sdf", "Signed distance volume of a closed mesh");
  sd->add_option("--mesh", sdf.mesh, "Closed genus-0 mesh (OBJ/PLY)")->required();
  sd->add_option("--like", sdf.like, "Volume whose grid is used (NIfTI)")->required();
  sd->add_option("--clip", sdf.clip, "Clip bound in mm; 0 disables clipping")->capture_default_str();
  sd->add_option("--out", sdf.out, "Output SDF (NIfTI)")->required();

  LossArgs loss;
  auto* lo = app.add_subcommand("loss", "SDF regression loss between two volumes");
  lo->add_option("--pred", loss.prediction, "Predicted SDF (NIfTI)")->required();
  lo->add_option("--target", loss.target, "Target SDF (NIfTI)")->required();
  lo->add_option("--kind", loss.kind, "l1 | l2 | huber")->capture_default_str();
  lo->add_option("--delta", loss.delta, "Huber threshold in mm")->capture_default_str();

  ReconArgs recon;
  auto* rc = app.add_subcommand("recon", "White and pial surface reconstruction from SDFs");
  rc->add_option("--wm-sdf", recon.subject.wm_sdf, "White-matter SDF (NIfTI)");
  rc->add_option("--pial-sdf", recon.subject.pial_sdf, "Pial SDF (NIfTI)");
  rc->add_option("--wm-mask", recon.subject.wm_mask, "Binary white-matter mask (NIfTI)");
  rc->add_option("--config", recon.config, "Pipeline config (JSON)");
  rc->add_option("--out-wm", recon.subject.out_wm, "White surface; PLY output carries thickness, curv, sulc");
  rc->add_option("--out-pial", recon.subject.out_pial, "Pial surface (OBJ/PLY)");
  rc->add_option("--trace", recon.subject.trace, "White-surface fit trace (CSV)");
  rc->add_option("--pial-trace", recon.subject.pial_trace, "Pial fit trace (CSV)");
  rc->add_option("--manifest", recon.subject.manifest, "Run manifest (JSON)");
  rc->add_option("--subjects", recon.subjects, "JSON list of subjects (keys as the flags, with underscores)");
  rc->add_option("--jobs", recon.jobs, "Subjects processed concurrently")->capture_default_str();

  MetricsArgs metrics;
  auto* me = app.add_subcommand("metrics", "Surface metrics as JSON");
  me->add_option("--wm", metrics.wm, "White surface (OBJ/PLY)")->required();
  me->add_option("--pial", metrics.pial, "Pial surface with the same connectivity");
  me->add_option("--reference", metrics.reference, "Reference surface for AAD/HD90");
  me->add_option("--out-scalars", metrics.out_scalars, "White surface with per-vertex scalars (PLY)");
  me->add_option("--inflation-iterations", metrics.inflation_iterations, "Inflation steps for sulcal depth")
      ->capture_default_str();

  MeshArgs mesh;
  auto* mh = app.add_subcommand("mesh", "Mesh utilities");
  mh->require_subcommand(1);
  auto* eu = mh->add_subcommand("euler", "Euler characteristic and manifold report");
  eu->add_option("--in", mesh.in, "Mesh (OBJ/PLY)")->required();
  auto* sx = mh->add_subcommand("selfx", "Self-intersecting triangle pairs");
  sx->add_option("--in", mesh.in, "Mesh (OBJ/PLY)")->required();
  auto* sm = mh->add_subcommand("smooth", "Taubin smoothing");
  sm->add_option("--in", mesh.in, "Mesh (OBJ/PLY)")->required();
  sm->add_option("--out", mesh.out, "Output mesh")->required();
  sm->add_option("--iterations", mesh.iterations, "Iterations")->capture_default_str();
  sm->add_option("--lambda", mesh.lambda, "Shrink factor")->capture_default_str();
  sm->add_option("--mu", mesh.mu, "Inflate factor")->capture_default_str();
  auto* in = mh->add_subcommand("inflate", "Area-preserving inflation; PLY output carries displacement");
  in->add_option("--in", mesh.in, "Mesh (OBJ/PLY)")->required();
  in->add_option("--out", mesh.out, "Output mesh")->required();
  in->add_option("--iterations", mesh.iterations, "Iterations")->capture_default_str();
  in->add_option("--step", mesh.step, "Laplacian step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "invalid_input"}, {"message", e.what()}}.dump() << "\n";
    return exit_code_for(ErrorCode::InvalidInput);
  }

  try {
    set_thread_count(threads);
    if (ph->parsed()) run_phantom(phantom);
    if (sy->parsed()) {
      if (seed_opt->count() > 0) synth.seed = synth_seed;
      run_synth(synth);
    }
    if (sd->parsed()) run_sdf(sdf);
    if (lo->parsed()) run_loss(loss);
    if (rc->parsed()) {
      if (recon.subjects.empty()) {
        const Subject& s = recon.subject;
        if (s.wm_sdf.empty() || s.pial_sdf.empty() || s.wm_mask.empty() || s.out_wm.empty() || s.out_pial.empty()) {
          throw Error(ErrorCode::InvalidInput,
                      "recon needs --wm-sdf, --pial-sdf, --wm-mask, --out-wm and --out-pial (or --subjects)");
        }
      }
      return run_recon(recon);
    }
    if (me->parsed()) run_metrics(metrics);
    if (eu->parsed()) run_mesh_euler(mesh);
    if (sx->parsed()) run_mesh_selfx(mesh);
    if (sm->parsed()) run_mesh_smooth(mesh);
    if (in->parsed()) run_mesh_inflate(mesh);
  } catch (const Error& e) {
    std::cerr << error_json(e).dump() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return kInternalFailure;
  }
  return 0;
}
