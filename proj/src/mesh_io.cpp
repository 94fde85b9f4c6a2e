#include "cortexforge/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cortexforge/error.hpp"

namespace cortexforge::io {

static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return out;
}

TriangleMesh build(std::vector<Vec3> v, std::vector<Triangle> t, const std::filesystem::path& path) {
  try {
    return TriangleMesh(std::move(v), std::move(t));
  } catch (const Error& e) {
    throw Error(ErrorCode::Format, path.string() + ": " + e.what());
  }
}

}  // namespace

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw Error(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        int i = 0;
        try {
          i = std::stoi(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          throw Error(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": bad face index");
        }
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(vertices.size()) + i);
      }
      if (idx.size() < 3) {
        throw Error(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": face needs 3 indices");
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return build(std::move(vertices), std::move(triangles), path);
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (const Vec3& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Triangle& t : mesh.triangles()) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
  bool list = false;
  std::string count_type;
};

int type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  throw Error(ErrorCode::Format, "unknown PLY property type " + t);
}

double read_scalar(const char* p, const std::string& t) {
  auto get = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof v);
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return get(std::int8_t{});
  if (t == "uchar" || t == "uint8") return get(std::uint8_t{});
  if (t == "short" || t == "int16") return get(std::int16_t{});
  if (t == "ushort" || t == "uint16") return get(std::uint16_t{});
  if (t == "int" || t == "int32") return get(std::int32_t{});
  if (t == "uint" || t == "uint32") return get(std::uint32_t{});
  if (t == "float" || t == "float32") return get(float{});
  return get(double{});
}

}  // namespace

TriangleMesh read_ply(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw Error(ErrorCode::Format, path.string() + ": not a PLY file");
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<PlyProperty> vprops, fprops;
  std::vector<PlyProperty>* current = nullptr;
  bool binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (tag == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      if (name == "vertex") {
        n_vertices = count;
        current = &vprops;
      } else if (name == "face") {
        n_faces = count;
        current = &fprops;
      } else {
        throw Error(ErrorCode::Format, path.string() + ": unsupported PLY element " + name);
      }
    } else if (tag == "property") {
      if (!current) throw Error(ErrorCode::Format, path.string() + ": property before element");
      PlyProperty p;
      ss >> p.type;
      if (p.type == "list") {
        p.list = true;
        ss >> p.count_type >> p.type;
      }
      ss >> p.name;
      current->push_back(p);
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!binary_le) throw Error(ErrorCode::Format, path.string() + ": only binary_little_endian PLY is supported");

  int xyz[3] = {-1, -1, -1};
  std::size_t stride = 0;
  std::vector<std::size_t> offset;
  for (std::size_t i = 0; i < vprops.size(); ++i) {
    if (vprops[i].list) throw Error(ErrorCode::Format, path.string() + ": list vertex property");
    offset.push_back(stride);
    stride += type_size(vprops[i].type);
    if (vprops[i].name == "x") xyz[0] = static_cast<int>(i);
    if (vprops[i].name == "y") xyz[1] = static_cast<int>(i);
    if (vprops[i].name == "z") xyz[2] = static_cast<int>(i);
  }
  if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0) throw Error(ErrorCode::Format, path.string() + ": missing x/y/z");

  std::vector<Vec3> vertices(n_vertices);
  std::vector<char> buf(stride);
  for (std::size_t v = 0; v < n_vertices; ++v) {
    if (!in.read(buf.data(), static_cast<std::streamsize>(stride))) {
      throw Error(ErrorCode::Format, path.string() + ": truncated vertex data");
    }
    for (int a = 0; a < 3; ++a) vertices[v][a] = read_scalar(buf.data() + offset[xyz[a]], vprops[xyz[a]].type);
  }

  std::vector<Triangle> triangles;
  triangles.reserve(n_faces);
  for (std::size_t f = 0; f < n_faces; ++f) {
    for (const PlyProperty& p : fprops) {
      char tmp[8];
      if (!p.list) {
        in.read(tmp, type_size(p.type));
        continue;
      }
      if (!in.read(tmp, type_size(p.count_type))) throw Error(ErrorCode::Format, path.string() + ": truncated faces");
      const auto count = static_cast<std::size_t>(read_scalar(tmp, p.count_type));
      std::vector<int> idx(count);
      for (std::size_t k = 0; k < count; ++k) {
        if (!in.read(tmp, type_size(p.type))) throw Error(ErrorCode::Format, path.string() + ": truncated faces");
        idx[k] = static_cast<int>(read_scalar(tmp, p.type));
      }
      if (p.name != "vertex_indices" && p.name != "vertex_index") continue;
      if (count < 3) throw Error(ErrorCode::Format, path.string() + ": face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < count; ++k) triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return build(std::move(vertices), std::move(triangles), path);
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
               const std::vector<VertexProperty>& properties) {
  for (const auto& p : properties) {
    if (p.values.size() != mesh.vertex_count()) {
      throw Error(ErrorCode::InvalidInput, "vertex property " + p.name + " has the wrong length");
    }
  }
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\ncomment cortexforge\n";
  out << "element vertex " << mesh.vertex_count() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  for (const auto& p : properties) out << "property float " << p.name << "\n";
  out << "element face " << mesh.triangle_count() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& x = mesh.vertices()[v];
    out.write(reinterpret_cast<const char*>(x.data()), 3 * sizeof(double));
    for (const auto& p : properties) {
      const auto f = static_cast<float>(p.values[v]);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  for (const Triangle& t : mesh.triangles()) {
    const std::uint8_t three = 3;
    out.write(reinterpret_cast<const char*>(&three), 1);
    out.write(reinterpret_cast<const char*>(t.data()), 3 * sizeof(int));
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".obj") return read_obj(path);
  if (ext == ".ply") return read_ply(path);
  throw Error(ErrorCode::InvalidInput, "unsupported mesh extension: " + path.string());
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  const std::string ext = lower_extension(path);
  if (ext == ".obj") return write_obj(path, mesh);
  if (ext == ".ply") return write_ply(path, mesh);
  throw Error(ErrorCode::InvalidInput, "unsupported mesh extension: " + path.string());
}

}  // namespace cortexforge::io
