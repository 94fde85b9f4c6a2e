#include <cmath>

#include "doctest.h"

#include "cortexforge/phantom.hpp"
#include "cortexforge/pipeline.hpp"

using namespace cortexforge;

namespace {

PhantomParams small_params() {
  PhantomParams p;
  p.size = 40;
  p.subdivisions = 3;
  return p;
}

LabelVolume inner_mask(const Phantom& ph) { return select_labels(ph.labels, {1}); }

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("sphere phantom: exact centre value and labels by sign") {
    const Phantom ph = make_phantom(PhantomKind::Sphere, PhantomParams{});
    CHECK(ph.sdfs[0].at(32, 32, 32) == -12.0);
    CHECK(ph.labels.geometry().voxel_center(32, 32, 32) == Vec3::Zero());
    for (std::size_t i = 0; i < ph.labels.size(); ++i) REQUIRE((ph.labels[i] == 1) == (ph.sdfs[0][i] <= 0.0));
    for (const Vec3& v : ph.meshes[0].vertices()) CHECK(v.norm() == doctest::Approx(12.0).epsilon(1e-12));
  }

  TEST_CASE("concentric phantom: the shell is between the two zero levels") {
    const Phantom ph = make_phantom(PhantomKind::Concentric, small_params());
    REQUIRE(ph.sdfs.size() == 2);
    for (std::size_t i = 0; i < ph.labels.size(); ++i) {
      const double in = ph.sdfs[0][i], out = ph.sdfs[1][i];
      if (in > 0.0 && out < 0.0) {
        REQUIRE(ph.labels[i] == 2);
      } else {
        REQUIRE(ph.labels[i] != 2);
      }
    }
  }

  TEST_CASE("folded phantom vertices follow the radial formula") {
    const TriangleMesh m = make_folded_sphere(12.0, 1.5, 6, 3);
    for (const Vec3& v : m.vertices()) {
      const double theta = std::acos(v.z() / v.norm());
      const double phi = std::atan2(v.y(), v.x());
      CHECK(std::abs(v.norm() - (12.0 + 1.5 * std::sin(6 * theta) * std::sin(6 * phi))) <= 1e-9);
    }
    CHECK(euler_characteristic(m) == 2);
  }

  TEST_CASE("invalid phantom parameters are rejected") {
    PhantomParams p;
    p.outer_radius = 11.0;
    CHECK_THROWS_AS(make_phantom(PhantomKind::Concentric, p), Error);
    p = PhantomParams{};
    p.radius = -1.0;
    CHECK_THROWS_AS(make_phantom(PhantomKind::Sphere, p), Error);
    CHECK_THROWS_AS(parse_phantom_kind("cube"), Error);
  }

  TEST_CASE("concentric phantom end to end: genus zero, no intersections, 3 mm thick, reproducible") {
    const Phantom ph = make_phantom(PhantomKind::Concentric, small_params());
    const PipelineResult a = run_pipeline(ph.sdfs[0], ph.sdfs[1], inner_mask(ph), PipelineConfig{});
    const auto& m = a.manifest.metrics;
    CHECK(m["wm_euler"] == 2);
    CHECK(m["pial_euler"] == 2);
    CHECK(m["wm_self_intersections"] == 0);
    CHECK(m["pial_self_intersections"] == 0);
    CHECK(std::abs(m["thickness_mean_mm"].get<double>() - 3.0) < 0.06);
    CHECK(a.thickness.values.size() == a.wm.vertex_count());
    CHECK(a.pial.triangles() == a.wm.triangles());

    const PipelineResult b = run_pipeline(ph.sdfs[0], ph.sdfs[1], inner_mask(ph), PipelineConfig{});
    CHECK(a.wm.vertices() == b.wm.vertices());
    CHECK(a.pial.vertices() == b.pial.vertices());
    CHECK(a.manifest.to_json(false) == b.manifest.to_json(false));
    CHECK(a.manifest.to_json(true).contains("stage_timings_ms"));
    CHECK_FALSE(a.manifest.to_json(false).contains("stage_timings_ms"));
  }

  TEST_CASE("config hash is SHA-256 of the sorted-key dump") {
    CHECK(config_hash(nlohmann::json::object()) ==
          "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");
    const nlohmann::json a = nlohmann::json::parse(R"({"b":[1,2],"a":1})");
    CHECK(config_hash(a) == "8baa73198470c7bb4c3ce142a8fd651affc0310d878bb9bd159e37a573fb4874");
    PipelineConfig c;
    const std::string h0 = config_hash(to_json(c));
    c.deform.step = 0.25;
    CHECK(config_hash(to_json(c)) != h0);
  }

  TEST_CASE("pipeline config JSON round trips and rejects unknown keys") {
    PipelineConfig c;
    c.smooth_iterations = 3;
    c.deform.lambda_normal = 0.001;
    c.seed = 9;
    CHECK(to_json(pipeline_config_from_json(to_json(c))) == to_json(c));
    nlohmann::json j = to_json(c);
    j["deform"]["lambda3"] = 1.0;
    CHECK_THROWS_AS(pipeline_config_from_json(j), Error);
    j = to_json(c);
    j["deform"]["shrink"] = 2.0;
    CHECK_THROWS_AS(pipeline_config_from_json(j), Error);
    const PipelineConfig shipped = load_pipeline_config(CORTEXFORGE_SOURCE_DIR "/configs/recon_default.json");
    CHECK(to_json(shipped) == to_json(PipelineConfig{}));
  }

  TEST_CASE("stage errors name the failing stage") {
    const Phantom ph = make_phantom(PhantomKind::Concentric, small_params());
    const LabelVolume wrong(GridGeometry::axis_aligned({8, 8, 8}, Vec3::Ones()), 1);
    try {
      run_pipeline(ph.sdfs[0], ph.sdfs[1], wrong, PipelineConfig{});
      FAIL("expected an error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "ingest");
      CHECK(e.code() == ErrorCode::GeometryMismatch);
      CHECK(e.partial().empty());
    }

    LabelVolume ring(ph.labels.geometry(), 0);
    for (int k = 15; k < 25; ++k)
      for (int j = 4; j < 36; ++j)
        for (int i = 4; i < 36; ++i) ring.at(i, j, k) = (i >= 11 && i < 29 && j >= 11 && j < 29) ? 0 : 1;
    try {
      run_pipeline(ph.sdfs[0], ph.sdfs[1], ring, PipelineConfig{});
      FAIL("expected an error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "topology");
      CHECK(e.code() == ErrorCode::TopologyRepairFailed);
      REQUIRE(e.final_euler.has_value());
      CHECK(*e.final_euler == 0);
    }
  }
}
