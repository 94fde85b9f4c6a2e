#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "cortexforge/nifti.hpp"

using namespace cortexforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cortexforge_nifti_tests";
  fs::create_directories(dir);
  return dir / name;
}

GridGeometry tilted() {
  Mat4 a = Mat4::Identity();
  a.topLeftCorner<3, 3>() << 0.0, -1.5, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0, 2.0;
  a.topRightCorner<3, 1>() = Vec3(12.5, -3.0, 7.25);
  return GridGeometry({5, 4, 3}, Vec3(1.5, 1.5, 2.0), a);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_SUITE("nifti") {
  TEST_CASE("scalar volumes round trip at float32 precision with the affine intact") {
    for (const char* name : {"scalar.nii", "scalar.nii.gz"}) {
      ScalarVolume vol(tilted(), 0.0);
      std::mt19937_64 gen(4);
      std::normal_distribution<double> n(0.0, 3.0);
      for (double& v : vol.data()) v = static_cast<float>(n(gen));
      nifti::write(scratch(name), vol);
      const ScalarVolume back = nifti::read_scalar(scratch(name));
      CHECK(back.dims() == vol.dims());
      CHECK(back.data() == vol.data());
      CHECK((back.geometry().affine() - vol.geometry().affine()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("label volumes round trip exactly") {
    LabelVolume labels(tilted(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint16_t>(i % 3);
    nifti::write(scratch("labels.nii.gz"), labels);
    CHECK(nifti::read_labels(scratch("labels.nii.gz")).data() == labels.data());
    LabelVolume wide(tilted(), 0);
    wide[3] = 300;
    nifti::write(scratch("wide.nii"), wide);
    CHECK(nifti::read_labels(scratch("wide.nii")).data() == wide.data());
  }

  TEST_CASE("fractional scalars are not accepted as labels") {
    ScalarVolume vol(tilted(), 0.5);
    nifti::write(scratch("frac.nii"), vol);
    CHECK(code_of([] { nifti::read_labels(scratch("frac.nii")); }) == ErrorCode::Format);
  }

  TEST_CASE("corrupt and missing files map to format and I/O errors") {
    {
      std::ofstream out(scratch("garbage.nii"), std::ios::binary);
      out << "this is not a nifti header";
    }
    CHECK(code_of([] { nifti::read_scalar(scratch("garbage.nii")); }) == ErrorCode::Format);
    ScalarVolume vol(tilted(), 1.0);
    nifti::write(scratch("trunc.nii"), vol);
    fs::resize_file(scratch("trunc.nii"), 360);
    CHECK(code_of([] { nifti::read_scalar(scratch("trunc.nii")); }) == ErrorCode::Format);
    CHECK(code_of([] { nifti::read_scalar(scratch("does_not_exist.nii")); }) == ErrorCode::Io);
  }
}
