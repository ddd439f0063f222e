#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssflow/solver.hpp"

namespace ssflow {

/// Everything a CLI run depends on. Each member is reachable through a
/// config key of the same name (see config_keys()).
struct RunConfig {
  SolverConfig solver;
  std::uint64_t seed = 0;
  bool progress = false;

  // inputs
  std::string lt, rt, lt1, rt1;  // image paths
  std::string fixture = "none";  // none | constant | static | square
  int fixture_size = 64;
  std::string fields_dir;        // directory with Lt.sff, Rt.sff, Lt1.sff, Rt1.sff
  std::string pred_flow, pred_disp0, pred_disp1;  // KITTI-format predictions
  std::string gt_flow, gt_disp0, gt_disp1;        // KITTI-format ground truth
  std::string data_dir;          // benchmark root (image_2/, image_3/, ...)

  // outputs
  std::string output_dir = "out";
  std::string csv;               // benchmark CSV path, stdout when empty
  bool kitti_output = true;      // solve: also write KITTI PNGs for Lt

  // viz
  double max_flow = 0.0;  // 0 = maximum magnitude of the input
  double max_disp = 0.0;

  // benchmark / selfcheck
  int jobs = 1;
  bool loss_only = false;
  int selfcheck_quads = 20;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// Every configurable key, in dump order.
const std::vector<ConfigKey>& config_keys();

/// Throws InvalidInput for an unknown key or a malformed value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat text: one `key = value` per line, `#` starts a comment, blank lines
/// ignored. Unknown keys are rejected with the offending line number.
void apply_config_text(RunConfig& cfg, const std::string& text);
/// Throws FormatError if the file cannot be read.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// All keys with their current values, loadable by apply_config_text.
std::string dump_config(const RunConfig& cfg);

/// "Lt,Rt" <-> {Lt, Rt}
std::set<ViewId> parse_view_list(const std::string& s);
std::string format_view_list(const std::set<ViewId>& views);

}  // namespace ssflow
