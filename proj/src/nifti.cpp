#include "cortexforge/nifti.hpp"

#include <cmath>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

namespace cortexforge::nifti {

namespace {

#pragma pack(push, 1)
struct Header {
  int sizeof_hdr;
  char data_type[10];
  char db_name[18];
  int extents;
  short session_error;
  char regular;
  char dim_info;
  short dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  short intent_code;
  short datatype;
  short bitpix;
  short slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  short slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  int glmax;
  int glmin;
  char descrip[80];
  char aux_file[24];
  short qform_code;
  short sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348, "NIfTI-1 header must be 348 bytes");

bool is_gzip(const std::filesystem::path& path) {
  const std::string s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + got);
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw Error(ErrorCode::Format, "corrupt compressed stream in " + path.string());
  return bytes;
}

void write_all(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  const char* mode = is_gzip(path) ? "wb6" : "wbT";
  gzFile f = gzopen(path.string().c_str(), mode);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const int wrote = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  const int closed = gzclose(f);
  if (wrote != static_cast<int>(bytes.size()) || closed != Z_OK) {
    throw Error(ErrorCode::Io, "failed writing " + path.string());
  }
}

Mat4 quaternion_affine(const Header& h) {
  const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  double a = 1.0 - (b * b + c * c + d * d);
  a = a < 1e-7 ? 0.0 : std::sqrt(a);
  Mat3 r;
  r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
      2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
      2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
  const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
  Mat4 m = Mat4::Identity();
  for (int i = 0; i < 3; ++i) {
    m(i, 0) = r(i, 0) * h.pixdim[1];
    m(i, 1) = r(i, 1) * h.pixdim[2];
    m(i, 2) = r(i, 2) * h.pixdim[3] * qfac;
  }
  m(0, 3) = h.qoffset_x;
  m(1, 3) = h.qoffset_y;
  m(2, 3) = h.qoffset_z;
  return m;
}

struct Decoded {
  GridGeometry geometry;
  std::vector<double> values;
  DataType type;
};

Decoded decode(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() < sizeof(Header)) throw Error(ErrorCode::Format, "truncated NIfTI header in " + path.string());
  Header h;
  std::memcpy(&h, bytes.data(), sizeof h);
  if (h.sizeof_hdr != 348) {
    throw Error(ErrorCode::Format, "not a little-endian NIfTI-1 file: " + path.string());
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) {
    throw Error(ErrorCode::Format, "only single-file NIfTI-1 (n+1) is supported: " + path.string());
  }
  if (h.dim[0] < 3 || h.dim[0] > 7) throw Error(ErrorCode::Format, "bad dim[0] in " + path.string());
  for (int i = 4; i <= h.dim[0]; ++i) {
    if (h.dim[i] > 1) throw Error(ErrorCode::Format, "4D and higher volumes are not supported");
  }
  const Dims dims{h.dim[1], h.dim[2], h.dim[3]};
  for (int d : dims) {
    if (d < 1) throw Error(ErrorCode::Format, "non-positive dimension in " + path.string());
  }

  int bytes_per;
  DataType type;
  switch (h.datatype) {
    case 2: bytes_per = 1; type = DataType::Uint8; break;
    case 4: bytes_per = 2; type = DataType::Int16; break;
    case 16: bytes_per = 4; type = DataType::Float32; break;
    default: throw Error(ErrorCode::Format, "unsupported NIfTI datatype " + std::to_string(h.datatype));
  }

  Mat4 affine = Mat4::Identity();
  if (h.sform_code > 0) {
    for (int c = 0; c < 4; ++c) {
      affine(0, c) = h.srow_x[c];
      affine(1, c) = h.srow_y[c];
      affine(2, c) = h.srow_z[c];
    }
  } else if (h.qform_code > 0) {
    affine = quaternion_affine(h);
  } else {
    throw Error(ErrorCode::Format, "NIfTI file has neither sform nor qform: " + path.string());
  }
  Vec3 spacing(std::abs(h.pixdim[1]), std::abs(h.pixdim[2]), std::abs(h.pixdim[3]));
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0)) spacing[a] = affine.col(a).head<3>().norm();
  }

  std::optional<GridGeometry> geometry;
  try {
    geometry.emplace(dims, spacing, affine);
  } catch (const Error& e) {
    throw Error(ErrorCode::Format, std::string("invalid NIfTI geometry: ") + e.what());
  }

  const std::size_t count = geometry->voxel_count();
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  if (offset < sizeof(Header) || bytes.size() < offset + count * bytes_per) {
    throw Error(ErrorCode::Format, "truncated NIfTI voxel data in " + path.string());
  }
  const unsigned char* src = bytes.data() + offset;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    switch (type) {
      case DataType::Uint8: values[i] = src[i]; break;
      case DataType::Int16: {
        std::int16_t v;
        std::memcpy(&v, src + 2 * i, 2);
        values[i] = v;
        break;
      }
      case DataType::Float32: {
        float v;
        std::memcpy(&v, src + 4 * i, 4);
        values[i] = v;
        break;
      }
    }
  }
  const bool scaled = h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);
  if (scaled) {
    for (double& v : values) v = v * h.scl_slope + h.scl_inter;
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Format, "non-finite voxel value in " + path.string());
  }
  return {std::move(*geometry), std::move(values), type};
}

std::vector<unsigned char> encode(const GridGeometry& g, DataType type, const auto& data) {
  Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int a = 0; a < 3; ++a) h.dim[a + 1] = static_cast<short>(g.dims()[a]);
  for (int a = 4; a < 8; ++a) h.dim[a] = 1;
  h.datatype = static_cast<short>(type);
  const int bytes_per = type == DataType::Uint8 ? 1 : type == DataType::Int16 ? 2 : 4;
  h.bitpix = static_cast<short>(8 * bytes_per);
  h.pixdim[0] = 1.0f;
  for (int a = 0; a < 3; ++a) h.pixdim[a + 1] = static_cast<float>(g.spacing()[a]);
  for (int a = 4; a < 8; ++a) h.pixdim[a] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2;  // mm
  h.sform_code = 1;
  const Mat4& m = g.affine();
  for (int c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(m(0, c));
    h.srow_y[c] = static_cast<float>(m(1, c));
    h.srow_z[c] = static_cast<float>(m(2, c));
  }
  std::memcpy(h.magic, "n+1", 4);
  std::strncpy(h.descrip, "cortexforge", sizeof h.descrip - 1);

  std::vector<unsigned char> out(352 + data.size() * bytes_per, 0);
  std::memcpy(out.data(), &h, sizeof h);
  unsigned char* dst = out.data() + 352;
  for (std::size_t i = 0; i < data.size(); ++i) {
    switch (type) {
      case DataType::Uint8: dst[i] = static_cast<unsigned char>(data[i]); break;
      case DataType::Int16: {
        const auto v = static_cast<std::int16_t>(data[i]);
        std::memcpy(dst + 2 * i, &v, 2);
        break;
      }
      case DataType::Float32: {
        const auto v = static_cast<float>(data[i]);
        std::memcpy(dst + 4 * i, &v, 4);
        break;
      }
    }
  }
  return out;
}

}  // namespace

ScalarVolume read_scalar(const std::filesystem::path& path) {
  Decoded d = decode(path);
  return ScalarVolume(std::move(d.geometry), std::move(d.values));
}

LabelVolume read_labels(const std::filesystem::path& path) {
  Decoded d = decode(path);
  std::vector<std::uint16_t> labels(d.values.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = d.values[i];
    if (v < 0.0 || v != std::floor(v) || v > 65535.0) {
      throw Error(ErrorCode::Format, "label volume holds non-integer or negative values: " + path.string());
    }
    labels[i] = static_cast<std::uint16_t>(v);
  }
  return LabelVolume(std::move(d.geometry), std::move(labels));
}

void write(const std::filesystem::path& path, const ScalarVolume& vol) {
  write_all(path, encode(vol.geometry(), DataType::Float32, vol.data()));
}

void write(const std::filesystem::path& path, const LabelVolume& vol) {
  std::uint16_t top = 0;
  for (auto v : vol.data()) top = std::max(top, v);
  if (top > 32767) throw Error(ErrorCode::InvalidInput, "label values exceed int16 range");
  const DataType type = top <= 255 ? DataType::Uint8 : DataType::Int16;
  write_all(path, encode(vol.geometry(), type, vol.data()));
}

}  // namespace cortexforge::nifti
