#include "cortexforge/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include <Eigen/Geometry>

#include "cortexforge/bvh.hpp"
#include "cortexforge/error.hpp"
#include "cortexforge/geometry.hpp"
#include "cortexforge/parallel.hpp"

namespace cortexforge {

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int n = static_cast<int>(vertices_.size());
  for (const Triangle& t : triangles_) {
    for (int idx : t) {
      if (idx < 0 || idx >= n) throw Error(ErrorCode::InvalidInput, "triangle index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error(ErrorCode::InvalidInput, "triangle repeats a vertex");
    }
  }
  for (const Vec3& v : vertices_) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite vertex coordinate");
  }
}

TriangleMesh TriangleMesh::with_vertices(std::vector<Vec3> vertices) const {
  if (vertices.size() != vertices_.size()) {
    throw Error(ErrorCode::InvalidInput, "vertex count changed");
  }
  TriangleMesh out;
  out.vertices_ = std::move(vertices);
  out.triangles_ = triangles_;
  return out;
}

TriangleMesh TriangleMesh::flipped() const {
  TriangleMesh out = *this;
  for (Triangle& t : out.triangles_) std::swap(t[1], t[2]);
  return out;
}

std::vector<Edge> unique_edges(const TriangleMesh& mesh) {
  std::vector<Edge> edges;
  edges.reserve(mesh.triangle_count() * 3);
  for (const Triangle& t : mesh.triangles()) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<std::vector<int>> vertex_neighbors(const TriangleMesh& mesh) {
  std::vector<std::vector<int>> nb(mesh.vertex_count());
  for (const auto& [a, b] : unique_edges(mesh)) {
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  for (auto& list : nb) std::sort(list.begin(), list.end());
  return nb;
}

long euler_characteristic(const TriangleMesh& mesh) {
  return static_cast<long>(mesh.vertex_count()) - static_cast<long>(unique_edges(mesh).size()) +
         static_cast<long>(mesh.triangle_count());
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

int connected_components(const TriangleMesh& mesh) {
  DisjointSets sets(mesh.vertex_count());
  for (const Triangle& t : mesh.triangles()) {
    sets.unite(t[0], t[1]);
    sets.unite(t[1], t[2]);
  }
  int count = 0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (sets.find(static_cast<int>(v)) == static_cast<int>(v)) ++count;
  }
  return count;
}

ManifoldReport inspect_manifold(const TriangleMesh& mesh) {
  ManifoldReport report;
  report.euler = euler_characteristic(mesh);
  report.components = connected_components(mesh);

  // Directed half-edge multiplicities keyed by undirected edge.
  std::map<Edge, std::pair<int, int>> uses;  // (count a->b with a<b, count b->a)
  for (const Triangle& t : mesh.triangles()) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      auto& u = uses[{std::min(a, b), std::max(a, b)}];
      if (a < b) ++u.first; else ++u.second;
    }
  }
  report.edge_manifold = true;
  report.consistently_oriented = true;
  for (const auto& [edge, u] : uses) {
    if (u.first + u.second != 2) report.edge_manifold = false;
    if (u.first != 1 || u.second != 1) report.consistently_oriented = false;
  }

  // Each vertex link (opposite edges of incident triangles) must be one cycle.
  std::vector<std::vector<Edge>> link(mesh.vertex_count());
  for (const Triangle& t : mesh.triangles()) {
    for (int e = 0; e < 3; ++e) link[t[e]].emplace_back(t[(e + 1) % 3], t[(e + 2) % 3]);
  }
  report.vertex_manifold = true;
  for (std::size_t v = 0; v < link.size() && report.vertex_manifold; ++v) {
    const auto& l = link[v];
    if (l.empty()) {
      report.vertex_manifold = false;
      break;
    }
    std::map<int, std::vector<int>> adj;
    for (const auto& [a, b] : l) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    for (const auto& [node, list] : adj) {
      if (list.size() != 2) report.vertex_manifold = false;
    }
    if (!report.vertex_manifold) break;
    // Walk the cycle from the first node and check it covers the link.
    const int start = adj.begin()->first;
    int prev = -1, cur = start;
    std::size_t steps = 0;
    do {
      const auto& list = adj[cur];
      const int next = list[0] != prev ? list[0] : list[1];
      prev = cur;
      cur = next;
      ++steps;
    } while (cur != start && steps <= adj.size());
    if (steps != adj.size()) report.vertex_manifold = false;
  }
  return report;
}

void require_closed_genus_zero(const TriangleMesh& mesh) {
  const ManifoldReport r = inspect_manifold(mesh);
  if (!r.closed_genus_zero()) {
    throw Error(ErrorCode::Topology,
                "mesh is not a closed oriented genus-0 surface (euler=" + std::to_string(r.euler) +
                    ", components=" + std::to_string(r.components) +
                    ", edge_manifold=" + std::to_string(r.edge_manifold) +
                    ", oriented=" + std::to_string(r.consistently_oriented) + ")");
  }
}

double signed_volume(const TriangleMesh& mesh) {
  double v = 0.0;
  const auto& x = mesh.vertices();
  for (const Triangle& t : mesh.triangles()) v += x[t[0]].dot(x[t[1]].cross(x[t[2]]));
  return v / 6.0;
}

double surface_area(const TriangleMesh& mesh) {
  std::vector<double> areas;
  areas.reserve(mesh.triangle_count());
  const auto& x = mesh.vertices();
  for (const Triangle& t : mesh.triangles()) {
    areas.push_back(0.5 * (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]).norm());
  }
  return pairwise_sum(areas);
}

Vec3 vertex_centroid(const TriangleMesh& mesh) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : mesh.vertices()) c += v;
  return mesh.vertex_count() ? Vec3(c / static_cast<double>(mesh.vertex_count())) : c;
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  if (!(radius > 0.0) || subdivisions < 0) {
    throw Error(ErrorCode::InvalidInput, "icosphere needs a positive radius and subdivisions >= 0");
  }
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<Edge, int> midpoint;
    auto mid = [&](int a, int b) {
      const Edge key{std::min(a, b), std::max(a, b)};
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const Triangle& t : f) {
      const int a = mid(t[0], t[1]);
      const int b = mid(t[1], t[2]);
      const int c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p = center + radius * p;
  return TriangleMesh(std::move(v), std::move(f));
}

namespace {

std::vector<Vec3> laplacian_step(const std::vector<Vec3>& x, const std::vector<std::vector<int>>& nb,
                                 double factor) {
  std::vector<Vec3> out(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (nb[v].empty()) {
      out[v] = x[v];
      continue;
    }
    Vec3 mean = Vec3::Zero();
    for (int u : nb[v]) mean += x[u];
    mean /= static_cast<double>(nb[v].size());
    out[v] = x[v] + factor * (mean - x[v]);
  }
  return out;
}

}  // namespace

TriangleMesh smooth(const TriangleMesh& mesh, int iterations, double lambda, double mu) {
  if (iterations < 0) throw Error(ErrorCode::InvalidInput, "smoothing iterations must be >= 0");
  if (!(lambda > 0.0 && lambda < -mu && -mu < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "smoothing factors must satisfy 0 < lambda < -mu < 1");
  }
  if (iterations == 0) return mesh;
  const auto nb = vertex_neighbors(mesh);
  std::vector<Vec3> x = mesh.vertices();
  for (int it = 0; it < iterations; ++it) {
    x = laplacian_step(x, nb, lambda);
    x = laplacian_step(x, nb, mu);
  }
  return mesh.with_vertices(std::move(x));
}

VertexFrames vertex_frames(const TriangleMesh& mesh) {
  const auto& x = mesh.vertices();
  const std::size_t n = x.size();
  std::vector<Vec3> sum(n, Vec3::Zero());
  std::vector<double> magnitude(n, 0.0);
  for (const Triangle& t : mesh.triangles()) {
    const Vec3 c = (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]);
    const double m = c.norm();
    for (int i : t) {
      sum[i] += c;
      magnitude[i] += m;
    }
  }
  VertexFrames f;
  f.normal.resize(n);
  f.tangent1.resize(n);
  f.tangent2.resize(n);
  const Vec3 z = Vec3::UnitZ();
  const Vec3 xaxis = Vec3::UnitX();
  for (std::size_t v = 0; v < n; ++v) {
    const double len = sum[v].norm();
    if (magnitude[v] == 0.0 || !(len > 1e-12 * magnitude[v])) {
      throw Error(ErrorCode::DegenerateGeometry,
                  "vertex " + std::to_string(v) + " has a zero-area umbrella");
    }
    const Vec3 nv = sum[v] / len;
    const Vec3 helper = std::abs(nv.dot(z)) > 0.9 ? xaxis : z;
    const Vec3 e1 = (helper - helper.dot(nv) * nv).normalized();
    f.normal[v] = nv;
    f.tangent1[v] = e1;
    f.tangent2[v] = nv.cross(e1);
  }
  return f;
}

namespace {

bool share_vertex(const Triangle& a, const Triangle& b) {
  for (int i : a)
    for (int j : b)
      if (i == j) return true;
  return false;
}

bool pair_intersects(const TriangleMesh& mesh, int i, int j) {
  const auto& x = mesh.vertices();
  const Triangle& a = mesh.triangles()[i];
  const Triangle& b = mesh.triangles()[j];
  return geom::triangles_intersect(x[a[0]], x[a[1]], x[a[2]], x[b[0]], x[b[1]], x[b[2]]);
}

}  // namespace

std::vector<std::pair<int, int>> self_intersections(const TriangleMesh& mesh) {
  const TriangleBvh bvh(mesh.vertices(), mesh.triangles(), false);
  std::vector<std::pair<int, int>> candidates;
  bvh.for_each_overlapping_pair([&](int i, int j) {
    if (!share_vertex(mesh.triangles()[i], mesh.triangles()[j])) candidates.emplace_back(i, j);
  });
  std::vector<char> hit(candidates.size(), 0);
  parallel_for(candidates.size(), [&](std::size_t k) {
    hit[k] = pair_intersects(mesh, candidates[k].first, candidates[k].second) ? 1 : 0;
  });
  std::vector<std::pair<int, int>> out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (hit[k]) out.push_back(candidates[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> self_intersections_brute_force(const TriangleMesh& mesh) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(mesh.triangle_count());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (share_vertex(mesh.triangles()[i], mesh.triangles()[j])) continue;
      if (pair_intersects(mesh, i, j)) out.emplace_back(i, j);
    }
  return out;
}

namespace {

double cot(const Vec3& a, const Vec3& b) { return a.dot(b) / a.cross(b).norm(); }

}  // namespace

CotangentLaplacian cotangent_laplacian(const TriangleMesh& mesh) {
  const auto& x = mesh.vertices();
  const std::size_t n = x.size();
  CotangentLaplacian L{std::vector<Vec3>(n, Vec3::Zero()), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                       std::vector<Vec3>(n, Vec3::Zero())};
  for (const Triangle& t : mesh.triangles()) {
    const Vec3 cross = (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]);
    const double tri_area = 0.5 * cross.norm();
    if (!(tri_area > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "zero-area triangle");
    for (int i : t) L.normal_sum[i] += cross;
    int obtuse_corner = -1;
    for (int c = 0; c < 3; ++c) {
      if ((x[t[(c + 1) % 3]] - x[t[c]]).dot(x[t[(c + 2) % 3]] - x[t[c]]) < 0.0) obtuse_corner = c;
    }
    for (int c = 0; c < 3; ++c) {
      // Corner c is opposite edge (i, j).
      const int i = t[(c + 1) % 3];
      const int j = t[(c + 2) % 3];
      const double w = cot(x[i] - x[t[c]], x[j] - x[t[c]]);
      L.lap[i] += 0.5 * w * (x[j] - x[i]);
      L.lap[j] += 0.5 * w * (x[i] - x[j]);
      L.weight_sum[i] += 0.5 * std::abs(w);
      L.weight_sum[j] += 0.5 * std::abs(w);
      if (obtuse_corner < 0) {
        const double len2 = (x[j] - x[i]).squaredNorm();
        L.area[i] += w * len2 / 8.0;
        L.area[j] += w * len2 / 8.0;
      }
    }
    if (obtuse_corner >= 0) {
      for (int c = 0; c < 3; ++c) L.area[t[c]] += (c == obtuse_corner ? 0.5 : 0.25) * tri_area;
    }
  }
  return L;
}

InflationResult inflate(const TriangleMesh& mesh, int iterations, double step) {
  if (iterations < 0) throw Error(ErrorCode::InvalidInput, "inflation iterations must be >= 0");
  if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorCode::InvalidInput, "inflation step must be in (0, 1]");
  const double area0 = surface_area(mesh);
  double mean_len2 = 0.0;
  const auto edges = unique_edges(mesh);
  for (const Edge& e : edges) mean_len2 += (mesh.vertices()[e.first] - mesh.vertices()[e.second]).squaredNorm();
  mean_len2 /= std::max<std::size_t>(1, edges.size());
  const double tau = step * mean_len2 / 4.0;

  const auto nb = vertex_neighbors(mesh);
  InflationResult result{mesh, std::vector<double>(mesh.vertex_count(), 0.0)};
  std::vector<Vec3> x = mesh.vertices();
  for (int it = 0; it < iterations; ++it) {
    const CotangentLaplacian L = cotangent_laplacian(result.mesh);
    const VertexFrames frames = vertex_frames(result.mesh);
    const std::vector<Vec3> uniform = laplacian_step(x, nb, step);
    std::vector<Vec3> next(x.size());
    for (std::size_t v = 0; v < x.size(); ++v) {
      // Normal motion follows mean curvature, capped so that no vertex
      // overshoots its weighted neighbourhood; tangential motion evens out
      // the vertex spacing.
      const Vec3& n = frames.normal[v];
      const double rate = L.weight_sum[v] > 0.0 ? std::min(tau / L.area[v], 1.0 / L.weight_sum[v]) : 0.0;
      const Vec3 slide = uniform[v] - x[v];
      next[v] = x[v] + rate * L.lap[v].dot(n) * n + (slide - slide.dot(n) * n);
    }
    const TriangleMesh moved = mesh.with_vertices(next);
    const double scale = std::sqrt(area0 / surface_area(moved));
    const Vec3 c = vertex_centroid(moved);
    for (std::size_t v = 0; v < next.size(); ++v) {
      next[v] = c + scale * (next[v] - c);
      result.displacement[v] += (next[v] - x[v]).dot(frames.normal[v]);
    }
    x = std::move(next);
    result.mesh = mesh.with_vertices(x);
  }
  return result;
}

}  // namespace cortexforge
