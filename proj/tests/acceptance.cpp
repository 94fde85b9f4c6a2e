// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "cortexforge/deform.hpp"
#include "cortexforge/mesh.hpp"
#include "cortexforge/metrics.hpp"
#include "cortexforge/parallel.hpp"
#include "cortexforge/phantom.hpp"
#include "cortexforge/pipeline.hpp"
#include "cortexforge/sdf.hpp"
#include "cortexforge/synth.hpp"

using namespace cortexforge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every fit trace produced anywhere in the suite, for the descent check.
std::vector<std::vector<TraceRow>> all_traces;

void keep_traces(const PipelineResult& r) {
  all_traces.push_back(r.wm_fit.trace);
  all_traces.push_back(r.pial_fit.trace);
}

// Pooled two-way distance to an analytic sphere: mesh vertices use the exact
// radial distance, and the sphere side is sampled by points lying exactly on it.
DistanceReport analytic_sphere_distance(const TriangleMesh& m, double r) {
  std::vector<double> pooled;
  for (const Vec3& v : m.vertices()) pooled.push_back(std::abs(v.norm() - r));
  const TriangleMesh ref = make_icosphere(r, 5);
  for (double d : vertex_to_surface_distances(ref, m)) pooled.push_back(d);
  DistanceReport out;
  for (double d : pooled) out.aad += d;
  out.aad /= static_cast<double>(pooled.size());
  out.hd90 = nearest_rank_percentile(pooled, 90.0);
  return out;
}

PhantomParams sphere_params() {
  PhantomParams p;
  p.size = 64;
  p.spacing = 1.0;
  p.radius = 12.0;
  p.outer_radius = 15.0;
  return p;
}

// Voxel-face surface of a repaired mask, smoothed, as a signed distance volume.
SdfVolume sdf_from_mask(const LabelVolume& mask) {
  const GenusZeroResult g = ensure_genus_zero(mask);
  return mesh_to_sdf(smooth(g.mesh, 10), mask.geometry());
}

LabelVolume threshold(const ScalarVolume& v, double level) {
  LabelVolume m(v.geometry(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = v[i] >= level ? 1 : 0;
  return m;
}

// Partial-volume style rendering: 1 inside, 0 outside, a one-voxel ramp across the surface.
ScalarVolume render(const SdfVolume& sdf) {
  ScalarVolume img(sdf.geometry(), 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(0.5 - sdf[i], 0.0, 1.0);
  return img;
}

LabelVolume degraded_mask(const SdfVolume& sdf, double spacing) {
  Rng unused(0);
  const AcquisitionParams acq{Orientation::Axial, spacing, std::min(5.0, spacing), 0.0};
  return threshold(simulate_acquisition(render(sdf), acq, unused), 0.5);
}

// ---------------------------------------------------------------- criteria

void criterion1() {
  set_thread_count(1);
  const Phantom ph = make_phantom(PhantomKind::Sphere, sphere_params());
  const SdfVolume pial = sphere_sdf(ph.labels.geometry(), 15.0);
  const auto t0 = Clock::now();
  const PipelineResult r = run_pipeline(ph.sdfs[0], pial, ph.labels, PipelineConfig{});
  const double secs = seconds_since(t0);
  set_thread_count(0);
  keep_traces(r);
  const DistanceReport d = analytic_sphere_distance(r.wm, 12.0);
  report(1, "sphere reconstruction fidelity", d.aad < 0.15 && d.hd90 < 0.40 && secs < 60.0,
         fmt("AAD %.4f mm (< 0.15), HD90 %.4f mm (< 0.40), single-threaded runtime %.1f s (< 60)", d.aad, d.hd90,
             secs));
}

void criterion2() {
  const auto t0 = Clock::now();
  const Phantom ph = make_phantom(PhantomKind::Sphere, sphere_params());
  std::vector<double> aad;
  std::string detail = "AAD by spacing:";
  for (int s = 1; s <= 6; ++s) {
    const LabelVolume mask = degraded_mask(ph.sdfs[0], s);
    const SdfVolume wm = sdf_from_mask(mask);
    SdfVolume pial = wm;
    for (double& v : pial.data()) v -= 3.0;
    const PipelineResult r = run_pipeline(wm, pial, mask, PipelineConfig{});
    keep_traces(r);
    aad.push_back(analytic_sphere_distance(r.wm, 12.0).aad);
    detail += fmt(" %dmm=%.3f", s, aad.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < aad.size(); ++i) monotone = monotone && aad[i] >= aad[i - 1];
  const double secs = seconds_since(t0);
  report(2, "resolution-degradation trend", monotone && secs < 600.0,
         detail + fmt("; non-decreasing: %s; runtime %.1f s (< 600)", monotone ? "yes" : "no", secs));
}

void criterion3() {
  const Phantom ph = make_phantom(PhantomKind::Concentric, sphere_params());
  const PipelineResult clean = run_pipeline(ph.sdfs[0], ph.sdfs[1], select_labels(ph.labels, {1}), PipelineConfig{});
  keep_traces(clean);
  const double t_clean = clean.thickness.mean();

  const LabelVolume wm_mask = degraded_mask(ph.sdfs[0], 6.0);
  const LabelVolume pial_mask = degraded_mask(ph.sdfs[1], 6.0);
  const PipelineResult low = run_pipeline(sdf_from_mask(wm_mask), sdf_from_mask(pial_mask), wm_mask, PipelineConfig{});
  keep_traces(low);
  const double t_low = low.thickness.mean();
  report(3, "thickness recovery", std::abs(t_clean - 3.0) <= 0.06 && std::abs(t_low - 3.0) <= 0.45,
         fmt("1 mm: %.4f mm (3.0 +/- 0.06); 6 mm spacing: %.4f mm (3.0 +/- 0.45)", t_clean, t_low));
}

LabelVolume noisy_sphere_mask(const GridGeometry& g, double r, std::mt19937_64& gen, int defect) {
  std::normal_distribution<double> noise(0.0, 0.4);
  LabelVolume m(g, 0);
  const Dims& n = g.dims();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) m.at(i, j, k) = g.voxel_center(i, j, k).norm() - r + noise(gen) <= 0.0 ? 1 : 0;
  std::uniform_int_distribution<int> jitter(-3, 3);
  std::uniform_int_distribution<int> axis_pick(0, 2);
  const int c = n[0] / 2;
  const int a = axis_pick(gen), b = (a + 1) % 3, e = (a + 2) % 3;
  const int ob = jitter(gen), oe = jitter(gen);
  auto set = [&](int along, int u, int w, std::uint16_t v) {
    int idx[3];
    idx[a] = along;
    idx[b] = u;
    idx[e] = w;
    if (idx[0] >= 0 && idx[1] >= 0 && idx[2] >= 0 && idx[0] < n[0] && idx[1] < n[1] && idx[2] < n[2]) {
      m.at(idx[0], idx[1], idx[2]) = v;
    }
  };
  const int ri = static_cast<int>(r);
  if (defect == 0) {
    // Through-hole: a 2x2 tunnel across the whole ball.
    for (int t = 0; t < n[a]; ++t)
      for (int u = 0; u < 2; ++u)
        for (int w = 0; w < 2; ++w) set(t, c + ob + u, c + oe + w, 0);
  } else if (defect == 1) {
    // Handle: a 2-voxel-thick staple standing off the surface.
    const int out = c + ri + 3;
    for (int t = c + ri - 2; t <= out; ++t)
      for (int u = 0; u < 2; ++u)
        for (int w = 0; w < 2; ++w) {
          set(t, c - 4 + u, c + oe + w, 1);
          set(t, c + 3 + u, c + oe + w, 1);
        }
    for (int s = c - 4; s <= c + 4; ++s)
      for (int u = 0; u < 2; ++u)
        for (int w = 0; w < 2; ++w) set(out - u, s, c + oe + w, 1);
  } else {
    // Enclosed cavity plus a detached speck.
    for (int t = -2; t <= 2; ++t)
      for (int u = -2; u <= 2; ++u)
        for (int w = -2; w <= 2; ++w) set(c + t, c + ob + u, c + oe + w, 0);
    set(1, 1, 1, 1);
  }
  return m;
}

void criterion4() {
  PhantomParams p = sphere_params();
  p.size = 40;
  p.radius = 10.0;
  const GridGeometry g = phantom_grid(p);
  const SdfVolume wm = sphere_sdf(g, 10.0);
  const SdfVolume pial = sphere_sdf(g, 13.0);
  std::mt19937_64 gen(2024);
  int ok = 0, repair_failed = 0, bad = 0;
  std::string bad_detail;
  for (int trial = 0; trial < 50; ++trial) {
    const LabelVolume mask = noisy_sphere_mask(g, 10.0, gen, trial % 3);
    try {
      const PipelineResult r = run_pipeline(wm, pial, mask, PipelineConfig{});
      keep_traces(r);
      const bool good = oracle::euler_characteristic(r.wm) == 2 && oracle::euler_characteristic(r.pial) == 2 &&
                        self_intersections(r.wm).empty() && self_intersections(r.pial).empty();
      if (good) {
        ++ok;
      } else {
        ++bad;
        bad_detail += fmt(" trial %d produced an invalid mesh;", trial);
      }
    } catch (const StageError& e) {
      if (exit_code_for(e.code()) == 3) {
        ++repair_failed;
      } else {
        ++bad;
        bad_detail += fmt(" trial %d failed with %s;", trial, std::string(to_string(e.code())).c_str());
      }
    }
  }
  report(4, "topology guarantee", bad == 0,
         fmt("%d valid genus-0 outputs, %d repair failures with exit code 3, %d violations", ok, repair_failed, bad) +
             bad_detail);
}

void criterion5() {
  std::size_t rows = 0;
  bool monotone = true;
  for (const auto& trace : all_traces) {
    rows += trace.size();
    for (std::size_t i = 1; i < trace.size(); ++i) monotone = monotone && trace[i].energy.total <= trace[i - 1].energy.total;
  }
  report(5, "descent property", monotone && !all_traces.empty(),
         fmt("%zu fit traces, %zu accepted states, energy non-increasing: %s", all_traces.size(), rows,
             monotone ? "yes" : "no"));
}

void criterion6() {
  const GridGeometry g = GridGeometry::axis_aligned({24, 24, 24}, Vec3::Ones(), Vec3::Constant(-12.0));
  SdfVolume sdf(g, 0.0);
  for (int k = 0; k < 24; ++k)
    for (int j = 0; j < 24; ++j)
      for (int i = 0; i < 24; ++i) {
        const Vec3 x = g.voxel_center(i, j, k);
        sdf.at(i, j, k) = 0.4 * (x.norm() - 4.0) + 0.3 * std::sin(x.x()) * std::cos(0.7 * x.y());
      }
  std::mt19937_64 gen(6);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const TriangleMesh m = oracle::random_closed_mesh(7, 14, 5.0, 0.3, gen);
    const VertexFrames f = vertex_frames(m);
    EnergyGradient grad;
    energy(m, vertex_neighbors(m), sdf, f, DeformConfig{}, &grad);
    const oracle::EnergyFd fd = oracle::surface_energy_fd(m, sdf, f, 1e-5);
    worst = std::max({worst, oracle::relative_error(grad.fidelity, fd.fidelity),
                      oracle::relative_error(grad.normal, fd.normal),
                      oracle::relative_error(grad.tangential, fd.tangential)});
  }
  report(6, "gradient check", worst <= 1e-5,
         fmt("worst relative error over 20 random 100-vertex meshes and 3 terms: %.3g (<= 1e-5)", worst));
}

void criterion7() {
  const GridGeometry g = GridGeometry::axis_aligned({16, 16, 16}, Vec3::Ones());
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0), small(-1.0, 1.0);
  SdfVolume target(g, 0.0), pred(g, 0.0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = u(gen);
    pred[i] = target[i] + small(gen);
  }
  const bool half = sdf_loss(pred, target, {LossKind::Huber, 1.0}).sum == sdf_loss(pred, target, {LossKind::L2, 1.0}).sum / 2.0;

  double knee_gap = 0.0;
  for (double delta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const LossSpec s{LossKind::Huber, delta};
    const double quadratic = 0.5 * delta * delta;
    const double linear = delta * (delta - 0.5 * delta);
    knee_gap = std::max({knee_gap, std::abs(loss_term(delta, s) - quadratic), std::abs(quadratic - linear),
                         std::abs(loss_term(std::nextafter(delta, 1e9), s) - quadratic)});
  }

  bool zero_iff = true;
  for (LossKind k : {LossKind::L1, LossKind::L2, LossKind::Huber}) {
    zero_iff = zero_iff && sdf_loss(target, target, {k, 1.0}).sum == 0.0;
    SdfVolume p = target;
    p[123] += 1e-6;
    zero_iff = zero_iff && sdf_loss(p, target, {k, 1.0}).sum > 0.0;
  }
  report(7, "loss identities", half && knee_gap <= 1e-12 && zero_iff,
         fmt("Huber == L2/2 inside the knee: %s; knee discontinuity %.2g (<= 1e-12); zero iff residual zero: %s",
             half ? "exact" : "no", knee_gap, zero_iff ? "yes" : "no"));
}

void criterion8() {
  std::mt19937_64 gen(8);
  double sdf_err = 0.0, dist_err = 0.0;
  bool selfx_equal = true;
  int with_hits = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const TriangleMesh a = oracle::random_closed_mesh(10, 25, 6.0, 0.2 + 0.25 * trial, gen);
    const TriangleMesh b = oracle::random_closed_mesh(8, 20, 7.0, 0.5, gen);

    const GridGeometry g = GridGeometry::axis_aligned({10, 10, 10}, Vec3::Constant(1.7), Vec3::Constant(-8.3));
    const SdfVolume s = mesh_to_sdf(b, g);
    for (int k = 0; k < 10; ++k)
      for (int j = 0; j < 10; ++j)
        for (int i = 0; i < 10; ++i) {
          const double o = oracle::signed_distance(g.voxel_center(i, j, k), b);
          sdf_err = std::max(sdf_err, std::abs(s.at(i, j, k) - o) / std::max(1.0, std::abs(o)));
        }

    std::vector<double> pooled;
    for (const Vec3& p : a.vertices()) pooled.push_back(oracle::point_mesh_distance(p, b));
    for (const Vec3& p : b.vertices()) pooled.push_back(oracle::point_mesh_distance(p, a));
    double sum = 0.0;
    for (double d : pooled) sum += d;
    std::sort(pooled.begin(), pooled.end());
    const double hd90 = pooled[static_cast<std::size_t>(std::ceil(0.9 * pooled.size())) - 1];
    const DistanceReport r = surface_distance(a, b);
    dist_err = std::max({dist_err, std::abs(r.aad - sum / pooled.size()) / r.aad, std::abs(r.hd90 - hd90) / hd90});

    const auto pairs = self_intersections(a);
    selfx_equal = selfx_equal && pairs == oracle::self_intersections(a);
    with_hits += pairs.empty() ? 0 : 1;
  }
  report(8, "oracle equivalence", sdf_err <= 1e-9 && dist_err <= 1e-9 && selfx_equal && with_hits > 0,
         fmt("SDF max rel error %.2g, distance max rel error %.2g (both <= 1e-9); self-intersections identical: %s "
             "(%d of 6 meshes intersecting); meshes <= 500 triangles",
             sdf_err, dist_err, selfx_equal ? "yes" : "no", with_hits));
}

void criterion9() {
  const SynthConfig cfg;
  std::vector<int> bins(8, 0);
  bool thickness_ok = true;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng = Rng::substream(seed, Stage::Acquisition);
    const AcquisitionParams a = sample_acquisition(cfg, rng);
    ++bins[std::min(7, static_cast<int>(a.spacing_mm - 1.0))];
    thickness_ok = thickness_ok && a.thickness_mm >= 1.0 && a.thickness_mm <= std::min(5.0, a.spacing_mm);
  }
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - 1250.0) * (b - 1250.0) / 1250.0;
  const double critical = 18.475;  // 99th percentile of chi-square, 7 degrees of freedom

  PhantomParams p = sphere_params();
  p.size = 40;
  p.subdivisions = 2;
  const Phantom ph = make_phantom(PhantomKind::Concentric, p);
  const SynthConfig shipped = load_synth_config(CORTEXFORGE_SOURCE_DIR "/configs/synth_default.json");
  const TrainingPair x = generate_training_pair(ph.labels, ph.sdfs, shipped, 4242);
  const TrainingPair y = generate_training_pair(ph.labels, ph.sdfs, shipped, 4242);
  bool identical = x.image.size() == y.image.size() &&
                   std::memcmp(x.image.data().data(), y.image.data().data(), x.image.size() * sizeof(double)) == 0;
  for (std::size_t i = 0; i < x.targets.size(); ++i) {
    identical = identical && std::memcmp(x.targets[i].data().data(), y.targets[i].data().data(),
                                         x.targets[i].size() * sizeof(double)) == 0;
  }
  report(9, "generator statistics", chi2 < critical && thickness_ok && identical,
         fmt("spacing chi-square %.2f (< %.3f, 8 bins, 1%% level) over 10^4 seeds; thickness <= min(5, spacing): %s; "
             "same-seed pair byte-identical: %s",
             chi2, critical, thickness_ok ? "always" : "violated", identical ? "yes" : "no"));
}

}  // namespace

// With arguments, only the listed criterion numbers run (C5 covers whichever fits ran).
int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<void()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {5, criterion5}};
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    try {
      run();
    } catch (const std::exception& e) {
      report(id, "raised an exception", false, e.what());
    }
  }
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
