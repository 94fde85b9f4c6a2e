#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "cortexforge/mesh.hpp"
#include "cortexforge/sdf.hpp"

using namespace cortexforge;

namespace {

GridGeometry shifted_grid(Dims dims, const Vec3& origin, double spacing = 1.0) {
  Mat4 a = Mat4::Identity();
  a.topLeftCorner<3, 3>() *= spacing;
  a.topRightCorner<3, 1>() = origin;
  return GridGeometry(dims, Vec3::Constant(spacing), a);
}

GridGeometry oblique_grid(Dims dims, const Vec3& origin) {
  Mat4 a = Mat4::Identity();
  a.topLeftCorner<3, 3>() << 1.3, 0.2, -0.1, 0.1, 1.1, 0.3, -0.2, 0.05, 1.4;
  a.topRightCorner<3, 1>() = origin;
  return GridGeometry(dims, Vec3(1.3, 1.1, 1.4), a);
}

TriangleMesh tetrahedron() {
  return TriangleMesh({Vec3(0, 0, 0), Vec3(4, 0, 0), Vec3(0, 4, 0), Vec3(0, 0, 4)},
                      {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}});
}

// Inside a convex, outward-wound mesh iff strictly behind every face plane.
bool behind_all_faces(const Vec3& p, const TriangleMesh& m) {
  for (const Triangle& t : m.triangles()) {
    const Vec3& a = m.vertices()[t[0]];
    const Vec3 n = (m.vertices()[t[1]] - a).cross(m.vertices()[t[2]] - a);
    if ((p - a).dot(n) >= 0.0) return false;
  }
  return true;
}

ScalarVolume random_volume(const GridGeometry& g, double lo, double hi, std::uint64_t seed) {
  ScalarVolume v(g, 0.0);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& x : v.data()) x = u(gen);
  return v;
}

}  // namespace

TEST_SUITE("sdf") {
  TEST_CASE("centre of an icosphere sits at minus the radius, within the chord bound") {
    const TriangleMesh ico = make_icosphere(10.0, 3);
    double rho_max = 0.0;
    for (const Triangle& t : ico.triangles()) {
      const Vec3& a = ico.vertices()[t[0]];
      const Vec3& b = ico.vertices()[t[1]];
      const Vec3& c = ico.vertices()[t[2]];
      const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
      const double area = 0.5 * (b - a).cross(c - a).norm();
      rho_max = std::max(rho_max, la * lb * lc / (4.0 * area));
    }
    const SdfVolume sdf = mesh_to_sdf(ico, shifted_grid({3, 3, 3}, Vec3(-1, -1, -1)));
    const double centre = sdf.at(1, 1, 1);
    CHECK(centre >= -10.0 - 1e-12);
    CHECK(centre <= -std::sqrt(100.0 - rho_max * rho_max) + 1e-12);
  }

  TEST_CASE("a voxel centre on a mesh vertex has distance zero") {
    const TriangleMesh ico = make_icosphere(6.0, 2);
    const SdfVolume sdf = mesh_to_sdf(ico, shifted_grid({2, 2, 2}, ico.vertices()[7]));
    CHECK(sdf.at(0, 0, 0) == 0.0);
  }

  TEST_CASE("random 20-triangle mesh matches the brute-force oracle at 100 points") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 5; ++trial) {
      const TriangleMesh m = oracle::random_closed_mesh(2, 5, 4.0, 0.6, gen);
      REQUIRE(m.triangle_count() == 20);
      const GridGeometry g = oblique_grid({5, 5, 4}, Vec3(-6.3, -5.1, -6.9));
      const SdfVolume sdf = mesh_to_sdf(m, g);
      for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 5; ++j)
          for (int i = 0; i < 5; ++i) {
            const double expect = oracle::signed_distance(g.voxel_center(i, j, k), m);
            CHECK(std::abs(sdf.at(i, j, k) - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
          }
    }
  }

  TEST_CASE("sign agrees with the half-space test on a tetrahedron and a box") {
    LabelVolume mask(GridGeometry::axis_aligned({6, 6, 6}, Vec3::Ones()), 0);
    for (int k = 1; k < 4; ++k)
      for (int j = 2; j < 5; ++j)
        for (int i = 1; i < 5; ++i) mask.at(i, j, k) = 1;
    for (const TriangleMesh& m : {tetrahedron(), tessellate(mask)}) {
      const GridGeometry g = shifted_grid({14, 14, 14}, Vec3(-1.13, -1.07, -1.21), 0.53);
      const SdfVolume sdf = mesh_to_sdf(m, g);
      for (int k = 0; k < 14; ++k)
        for (int j = 0; j < 14; ++j)
          for (int i = 0; i < 14; ++i) {
            REQUIRE((sdf.at(i, j, k) < 0.0) == behind_all_faces(g.voxel_center(i, j, k), m));
          }
    }
  }

  TEST_CASE("translating mesh and grid together leaves the SDF unchanged") {
    const TriangleMesh m = make_icosphere(5.0, 2, Vec3(0.3, -0.2, 0.1));
    const Vec3 t(13.7, -4.25, 8.5);
    std::vector<Vec3> moved = m.vertices();
    for (Vec3& v : moved) v += t;
    const GridGeometry g = oblique_grid({8, 8, 8}, Vec3(-6, -6, -6));
    const GridGeometry gt = oblique_grid({8, 8, 8}, Vec3(-6, -6, -6) + t);
    const SdfVolume a = mesh_to_sdf(m, g);
    const SdfVolume b = mesh_to_sdf(m.with_vertices(moved), gt);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
  }

  TEST_CASE("open or non-manifold meshes are rejected") {
    const TriangleMesh ico = make_icosphere(5.0, 1);
    std::vector<Triangle> open(ico.triangles().begin() + 1, ico.triangles().end());
    try {
      mesh_to_sdf(TriangleMesh(ico.vertices(), open), shifted_grid({4, 4, 4}, Vec3::Zero()));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Topology);
    }
  }

  TEST_CASE("clipping clamps, keeps in-range values and is idempotent") {
    const GridGeometry g = GridGeometry::axis_aligned({6, 6, 6}, Vec3::Ones());
    const ScalarVolume v = random_volume(g, -12.0, 12.0, 4);
    const ScalarVolume c = clip_sdf(v, 5.0);
    CHECK(clip_sdf(c, 5.0).data() == c.data());
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(std::abs(c[i]) <= 5.0);
      CHECK(std::signbit(c[i]) == std::signbit(v[i]));
      if (std::abs(v[i]) <= 5.0) CHECK(c[i] == v[i]);
    }
    ScalarVolume one(GridGeometry::axis_aligned({1, 1, 1}, Vec3::Ones()), 7.3);
    CHECK(clip_sdf(one)[0] == 5.0);
    CHECK_THROWS_AS(clip_sdf(one, 0.0), Error);
  }

  TEST_CASE("losses vanish exactly when prediction equals target") {
    const GridGeometry g = GridGeometry::axis_aligned({5, 5, 5}, Vec3::Ones());
    const ScalarVolume t = clip_sdf(random_volume(g, -8.0, 8.0, 1));
    ScalarVolume p = t;
    for (LossKind k : {LossKind::L1, LossKind::L2, LossKind::Huber}) {
      CHECK(sdf_loss(t, t, {k, 1.0}).sum == 0.0);
      p[17] = t[17] + 1e-9;
      CHECK(sdf_loss(p, t, {k, 1.0}).sum > 0.0);
      p[17] = t[17];
    }
  }

  TEST_CASE("constant residual gives closed-form sums; Huber meets at the knee") {
    const GridGeometry g = GridGeometry::axis_aligned({4, 3, 5}, Vec3::Ones());
    const double n = 60.0;
    const ScalarVolume t(g, 0.5);
    const ScalarVolume p(g, -1.5);
    CHECK(sdf_loss(p, t, {LossKind::L2, 1.0}).sum == n * 4.0);
    CHECK(sdf_loss(p, t, {LossKind::L1, 1.0}).sum == n * 2.0);
    const LossValue h = sdf_loss(p, t, {LossKind::Huber, 2.0});
    CHECK(h.sum == n * 2.0);
    CHECK(h.mean == 2.0);
    for (double delta : {0.25, 1.0, 3.5}) {
      const double quad = 0.5 * delta * delta;
      const double lin = delta * (delta - 0.5 * delta);
      CHECK(std::abs(loss_term(delta, {LossKind::Huber, delta}) - quad) <= 1e-12);
      CHECK(std::abs(quad - lin) <= 1e-12);
      CHECK(std::abs(loss_term(std::nextafter(delta, 10.0), {LossKind::Huber, delta}) - quad) <= 1e-12);
    }
  }

  TEST_CASE("Huber is half of L2 when every residual is inside the knee") {
    const GridGeometry g = GridGeometry::axis_aligned({7, 7, 7}, Vec3::Ones());
    const ScalarVolume t = random_volume(g, -5.0, 5.0, 2);
    ScalarVolume p = t;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> r(-1.0, 1.0);
    for (double& x : p.data()) x += r(gen);
    CHECK(sdf_loss(p, t, {LossKind::Huber, 1.0}).sum == sdf_loss(p, t, {LossKind::L2, 1.0}).sum / 2.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double res = p[i] - t[i];
      CHECK(loss_term(res, {LossKind::Huber, 1.0}) == loss_term(res, {LossKind::L2, 1.0}) / 2.0);
    }
  }

  TEST_CASE("Huber slope is continuous across the knee") {
    const double delta = 1.3;
    const LossSpec s{LossKind::Huber, delta};
    for (double h : {1e-3, 1e-4, 1e-5}) {
      const double below = (loss_term(delta - h, s) - loss_term(delta - 2 * h, s)) / h;
      const double above = (loss_term(delta + 2 * h, s) - loss_term(delta + h, s)) / h;
      CHECK(std::abs(above - below) <= 4.0 * h);
    }
  }

  TEST_CASE("all losses are non-negative") {
    const GridGeometry g = GridGeometry::axis_aligned({6, 6, 6}, Vec3::Ones());
    for (std::uint64_t s = 0; s < 10; ++s) {
      const ScalarVolume a = random_volume(g, -5.0, 5.0, s);
      const ScalarVolume b = random_volume(g, -5.0, 5.0, s + 100);
      for (LossKind k : {LossKind::L1, LossKind::L2, LossKind::Huber}) CHECK(sdf_loss(a, b, {k, 0.7}).sum > 0.0);
    }
  }

  TEST_CASE("geometry mismatch and a bad delta are rejected") {
    const ScalarVolume a(GridGeometry::axis_aligned({3, 3, 3}, Vec3::Ones()), 0.0);
    const ScalarVolume b(GridGeometry::axis_aligned({3, 3, 4}, Vec3::Ones()), 0.0);
    CHECK_THROWS_AS(sdf_loss(a, b, {}), Error);
    CHECK_THROWS_AS(sdf_loss(a, a, {LossKind::Huber, 0.0}), Error);
    CHECK(parse_loss_kind("huber") == LossKind::Huber);
    CHECK_THROWS_AS(parse_loss_kind("l3"), Error);
  }
}
