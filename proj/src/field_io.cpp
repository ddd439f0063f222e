#include "ssflow/field_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "ssflow/error.hpp"

namespace ssflow {

namespace {

constexpr char kMagic[] = "SSFF1";

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

}  // namespace

void write_field(const std::string& path, const SceneFlowField& f) {
  require(f.values.channels() == 4, "write_field: field must have 4 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << kMagic << "\n" << view_name(f.reference) << " " << f.width() << " " << f.height() << "\n";
  std::vector<double> plane(f.values.pixel_count());
  for (int c = 0; c < 4; ++c) {
    std::size_t i = 0;
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) plane[i++] = f.values.at(y, x, c);
    out.write(reinterpret_cast<const char*>(plane.data()),
              static_cast<std::streamsize>(plane.size() * sizeof(double)));
  }
  if (!out) throw FormatError("write failed for " + path);
}

SceneFlowField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string magic, header;
  if (!std::getline(in, magic) || magic != kMagic) throw FormatError(path + ": not a field file");
  if (!std::getline(in, header)) throw FormatError(path + ": missing header");
  std::istringstream hs(header);
  std::string view;
  int w = 0, h = 0;
  if (!(hs >> view >> w >> h) || w <= 0 || h <= 0) throw FormatError(path + ": bad header '" + header + "'");
  ViewId ref;
  try {
    ref = parse_view(view);
  } catch (const InvalidInput&) {
    throw FormatError(path + ": unknown view '" + view + "'");
  }
  SceneFlowField f(ref, h, w);
  std::vector<double> plane(f.values.pixel_count());
  for (int c = 0; c < 4; ++c) {
    in.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(plane.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(plane.size() * sizeof(double)))
      throw FormatError(path + ": truncated data");
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) f.values.at(y, x, c) = plane[i++];
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path + ": trailing bytes");
  if (!f.values.all_finite()) throw FormatError(path + ": non-finite values");
  return f;
}

std::string field_path(const std::string& dir, ViewId v) {
  return (std::filesystem::path(dir) / (view_name(v) + ".sff")).string();
}

}  // namespace ssflow
