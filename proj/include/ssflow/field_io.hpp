#pragma once

#include <string>

#include "ssflow/geometry.hpp"

namespace ssflow {

// Scene-flow field file (.sff):
//   "SSFF1\n"
//   "<view> <width> <height>\n"     view is Lt, Rt, Lt1 or Rt1
//   4 planes (u, v, disp_ref, disp_other) of width*height little-endian float64

void write_field(const std::string& path, const SceneFlowField& f);
/// Throws FormatError on a malformed or truncated file.
SceneFlowField read_field(const std::string& path);

/// Lt.sff, Rt.sff, Lt1.sff, Rt1.sff inside `dir`.
std::string field_path(const std::string& dir, ViewId v);

}  // namespace ssflow
