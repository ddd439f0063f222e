#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "ssflow/error.hpp"
#include "ssflow/field_io.hpp"
#include "ssflow/synth.hpp"

using namespace ssflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "ssflow_test_field_io";
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_CASE("round trip is exact for every view") {
  const FieldSet f = synth::random_fields(7, 11, 1e3, 9);
  for (ViewId v : kAllViews) {
    const std::string p = field_path(scratch().string(), v);
    write_field(p, f.at(v));
    const SceneFlowField back = read_field(p);
    CHECK(back.reference == v);
    CHECK(back.values == f.at(v).values);
  }
  CHECK(fs::path(field_path("d", kLeftT1)).filename() == "Lt1.sff");
}

TEST_CASE("file layout") {
  SceneFlowField f(kRightT, 1, 2);
  f.values.at(0, 1, SceneFlowField::V) = 1.5;
  const fs::path p = scratch() / "layout.sff";
  write_field(p.string(), f);
  CHECK(fs::file_size(p) == std::string("SSFF1\nRt 2 1\n").size() + 8 * 2 * 4);
  std::ifstream in(p, std::ios::binary);
  std::string magic, header;
  std::getline(in, magic);
  std::getline(in, header);
  CHECK(magic == "SSFF1");
  CHECK(header == "Rt 2 1");
}

TEST_CASE("malformed files") {
  const fs::path p = scratch() / "bad.sff";
  CHECK_THROWS_AS(read_field((scratch() / "absent.sff").string()), FormatError);
  write_text(p, "NOPE\nLt 1 1\n");
  CHECK_THROWS_AS(read_field(p.string()), FormatError);
  write_text(p, "SSFF1\nXx 1 1\n" + std::string(32, '\0'));
  CHECK_THROWS_AS(read_field(p.string()), FormatError);
  write_text(p, "SSFF1\nLt 0 1\n");
  CHECK_THROWS_AS(read_field(p.string()), FormatError);
  write_text(p, "SSFF1\nLt 1 1\n" + std::string(31, '\0'));
  CHECK_THROWS_AS(read_field(p.string()), FormatError);
  write_text(p, "SSFF1\nLt 1 1\n" + std::string(33, '\0'));
  CHECK_THROWS_AS(read_field(p.string()), FormatError);

  SceneFlowField nan(kLeftT, 1, 1);
  nan.values.at(0, 0, 0) = std::numeric_limits<double>::quiet_NaN();
  write_field(p.string(), nan);
  CHECK_THROWS_AS(read_field(p.string()), FormatError);
  CHECK_THROWS_AS(write_field((scratch() / "no" / "dir" / "x.sff").string(), nan), FormatError);
}
