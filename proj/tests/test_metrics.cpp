#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "oracles.hpp"

#include "cortexforge/mesh.hpp"
#include "cortexforge/metrics.hpp"
#include "cortexforge/phantom.hpp"

using namespace cortexforge;

namespace {

TriangleMesh grid_plane(int n, double z, double pitch = 1.0) {
  std::vector<Vec3> x;
  std::vector<Triangle> t;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) x.emplace_back(i * pitch, j * pitch, z);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i;
      t.push_back({a, a + 1, a + n + 2});
      t.push_back({a, a + n + 2, a + n + 1});
    }
  return TriangleMesh(x, t);
}

TriangleMesh transformed(const TriangleMesh& m, const Mat3& r, const Vec3& t) {
  std::vector<Vec3> x = m.vertices();
  for (Vec3& v : x) v = r * v + t;
  return m.with_vertices(x);
}

Mat3 some_rotation() {
  return (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()) * Eigen::AngleAxisd(-1.1, Vec3::UnitX()))
      .toRotationMatrix();
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("concentric icospheres are 3 mm thick everywhere") {
    const TriangleMesh wm = make_icosphere(12.0, 4);
    const TriangleMesh pial = make_icosphere(15.0, 4);
    const SurfaceScalars t = thickness(wm, pial);
    CHECK(t.quantity == SurfaceQuantity::Thickness);
    for (double v : t.values) CHECK(std::abs(v - 3.0) < 0.03);
    for (double v : thickness(wm, wm).values) CHECK(v == 0.0);
  }

  TEST_CASE("parallel planes report the gap away from the borders") {
    const double gap = 2.75;
    const TriangleMesh a = grid_plane(10, 0.0);
    const TriangleMesh b = grid_plane(10, gap);
    const SurfaceScalars t = thickness(a, b);
    for (std::size_t v = 0; v < a.vertex_count(); ++v) CHECK(t.values[v] == doctest::Approx(gap).epsilon(1e-12));
  }

  TEST_CASE("thickness is symmetric and needs shared connectivity") {
    std::mt19937_64 gen(2);
    const TriangleMesh a = oracle::random_closed_mesh(6, 12, 10.0, 0.5, gen);
    std::vector<Vec3> x = a.vertices();
    for (Vec3& v : x) v *= 1.25;
    const TriangleMesh b = a.with_vertices(x);
    CHECK(thickness(a, b).values == thickness(b, a).values);
    CHECK_THROWS_AS(thickness(a, make_icosphere(10.0, 2)), Error);
  }

  TEST_CASE("sulcal depth is mean-centred and vanishes on a sphere") {
    const TriangleMesh ico = make_icosphere(12.0, 3);
    const InflationResult inf = inflate(ico, 50);
    const SurfaceScalars d = sulcal_depth(ico, inf.displacement);
    CHECK(std::abs(d.mean()) <= 1e-9);
    for (double v : d.values) CHECK(std::abs(v) < 1e-3 * 12.0);
    CHECK_THROWS_AS(sulcal_depth(ico, {1.0, 2.0}), Error);
  }

  TEST_CASE("sulcal depth follows the fold phase on a folded sphere") {
    const TriangleMesh folded = make_folded_sphere(12.0, 1.5, 6, 4);
    const SurfaceScalars d = sulcal_depth(folded, inflate(folded, 100).displacement);
    CHECK(std::abs(d.mean()) <= 1e-9);
    int crests = 0, troughs = 0;
    for (std::size_t v = 0; v < folded.vertex_count(); ++v) {
      const Vec3 p = folded.vertices()[v];
      const double theta = std::acos(std::clamp(p.z() / p.norm(), -1.0, 1.0));
      const double phi = std::atan2(p.y(), p.x());
      const double phase = std::sin(6 * theta) * std::sin(6 * phi);
      if (phase > 0.9) {
        ++crests;
        CHECK(d.values[v] < 0.0);
      } else if (phase < -0.9) {
        ++troughs;
        CHECK(d.values[v] > 0.0);
      }
    }
    CHECK(crests > 0);
    CHECK(troughs > 0);
  }

  TEST_CASE("sphere mean curvature is 1/r and flips with orientation") {
    for (double r : {5.0, 12.0}) {
      const TriangleMesh ico = make_icosphere(r, 4);
      const SurfaceScalars h = curvature(ico);
      for (double v : h.values) CHECK(std::abs(v - 1.0 / r) <= 0.05 / r);
      const SurfaceScalars hf = curvature(ico.flipped());
      for (std::size_t i = 0; i < h.values.size(); ++i) CHECK(hf.values[i] == doctest::Approx(-h.values[i]));
    }
  }

  TEST_CASE("a plane has zero curvature at interior vertices") {
    const TriangleMesh p = grid_plane(6, 1.5, 0.8);
    const SurfaceScalars h = curvature(p);
    for (int j = 1; j < 6; ++j)
      for (int i = 1; i < 6; ++i) CHECK(std::abs(h.values[j * 7 + i]) <= 1e-6);
  }

  TEST_CASE("zero-area triangles make curvature fail") {
    const TriangleMesh flat(std::vector<Vec3>(4, Vec3(1, 2, 3)), {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}});
    try {
      curvature(flat);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateGeometry);
    }
  }

  TEST_CASE("the angle defect of every closed genus-zero mesh totals 4 pi") {
    std::mt19937_64 gen(4);
    std::vector<TriangleMesh> meshes{make_icosphere(3.0, 3), make_folded_sphere(12.0, 1.5, 6, 3)};
    for (int i = 0; i < 5; ++i) meshes.push_back(oracle::random_closed_mesh(8, 11, 6.0, 1.0, gen));
    for (const TriangleMesh& m : meshes) {
      REQUIRE(euler_characteristic(m) == 2);
      CHECK(std::abs(total_angle_defect(m) - 4.0 * std::numbers::pi) <= 1e-6);
    }
  }

  TEST_CASE("distance between a mesh and itself is zero; concentric spheres give the gap") {
    const TriangleMesh a = make_icosphere(12.0, 4);
    const DistanceReport same = surface_distance(a, a);
    CHECK(same.aad == 0.0);
    CHECK(same.hd90 == 0.0);
    const DistanceReport r = surface_distance(a, make_icosphere(14.0, 4));
    CHECK(std::abs(r.aad - 2.0) < 0.03);
    CHECK(std::abs(r.hd90 - 2.0) < 0.03);
  }

  TEST_CASE("surface distance matches the all-pairs oracle on 500-triangle meshes") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 3; ++trial) {
      const TriangleMesh a = oracle::random_closed_mesh(10, 25, 8.0, 0.4, gen);
      const TriangleMesh b = oracle::random_closed_mesh(10, 25, 9.0, 0.8, gen);
      REQUIRE(a.triangle_count() == 500);
      std::vector<double> pooled;
      double sum_ab = 0.0, sum_ba = 0.0;
      for (const Vec3& p : a.vertices()) {
        pooled.push_back(oracle::point_mesh_distance(p, b));
        sum_ab += pooled.back();
      }
      for (const Vec3& p : b.vertices()) {
        pooled.push_back(oracle::point_mesh_distance(p, a));
        sum_ba += pooled.back();
      }
      std::sort(pooled.begin(), pooled.end());
      double sum = 0.0;
      for (double d : pooled) sum += d;
      const double hd90 = pooled[static_cast<std::size_t>(std::ceil(0.9 * pooled.size())) - 1];
      const DistanceReport r = surface_distance(a, b);
      CHECK(std::abs(r.aad - sum / pooled.size()) <= 1e-9 * r.aad);
      CHECK(std::abs(r.hd90 - hd90) <= 1e-9 * hd90);
      CHECK(std::abs(r.mean_a_to_b - sum_ab / a.vertex_count()) <= 1e-9 * r.mean_a_to_b);
      CHECK(std::abs(r.mean_b_to_a - sum_ba / b.vertex_count()) <= 1e-9 * r.mean_b_to_a);
    }
  }

  TEST_CASE("surface distance is symmetric and invariant to rigid motion") {
    std::mt19937_64 gen(10);
    const TriangleMesh a = oracle::random_closed_mesh(6, 12, 8.0, 0.5, gen);
    const TriangleMesh b = oracle::random_closed_mesh(6, 12, 9.5, 0.5, gen);
    const DistanceReport ab = surface_distance(a, b);
    const DistanceReport ba = surface_distance(b, a);
    CHECK(ab.aad == ba.aad);
    CHECK(ab.hd90 == ba.hd90);

    const Mat3 rot = some_rotation();
    const Vec3 t(3.0, -7.5, 11.0);
    const DistanceReport moved = surface_distance(transformed(a, rot, t), transformed(b, rot, t));
    CHECK(std::abs(moved.aad - ab.aad) <= 1e-9 * ab.aad);
    CHECK(std::abs(moved.hd90 - ab.hd90) <= 1e-9 * ab.hd90);
    const std::vector<double> t0 = thickness(a, a.with_vertices(b.vertices())).values;
    const std::vector<double> t1 =
        thickness(transformed(a, rot, t), transformed(a.with_vertices(b.vertices()), rot, t)).values;
    for (std::size_t v = 0; v < t0.size(); ++v) CHECK(std::abs(t0[v] - t1[v]) <= 1e-9 * t0[v]);
  }

  TEST_CASE("nearest-rank percentile") {
    std::vector<double> v{10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
    CHECK(nearest_rank_percentile(v, 90.0) == 9.0);
    CHECK(nearest_rank_percentile(v, 100.0) == 10.0);
    CHECK(nearest_rank_percentile(v, 1.0) == 1.0);
    CHECK(nearest_rank_percentile({4.0}, 90.0) == 4.0);
    CHECK_THROWS_AS(nearest_rank_percentile({}, 90.0), Error);
    CHECK_THROWS_AS(surface_distance(TriangleMesh(), make_icosphere(1.0, 0)), Error);
  }
}
