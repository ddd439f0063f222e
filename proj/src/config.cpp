#include "ssflow/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ssflow/error.hpp"

namespace ssflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw InvalidInput("config: invalid value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw InvalidInput("config: invalid boolean '" + value + "' for " + key);
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

ConfigKey int_key(std::string name, std::string help, int RunConfig::*member) {
  return {name, std::move(help),
          [name, member](RunConfig& c, const std::string& v) { c.*member = parse_number<int>(name, v); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

ConfigKey double_key(std::string name, std::string help, double RunConfig::*member) {
  return {name, std::move(help),
          [name, member](RunConfig& c, const std::string& v) { c.*member = parse_number<double>(name, v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

ConfigKey bool_key(std::string name, std::string help, bool RunConfig::*member) {
  return {name, std::move(help),
          [name, member](RunConfig& c, const std::string& v) { c.*member = parse_bool(name, v); },
          [member](const RunConfig& c) { return format_bool(c.*member); }};
}

ConfigKey string_key(std::string name, std::string help, std::string RunConfig::*member) {
  return {name, std::move(help), [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; }};
}

// Keys on nested members go through accessors.
template <typename T>
ConfigKey nested_key(std::string name, std::string help, T& (*ref)(RunConfig&)) {
  if constexpr (std::is_same_v<T, int>) {
    return {name, std::move(help),
            [name, ref](RunConfig& c, const std::string& v) { ref(c) = parse_number<int>(name, v); },
            [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
  } else if constexpr (std::is_same_v<T, bool>) {
    return {name, std::move(help),
            [name, ref](RunConfig& c, const std::string& v) { ref(c) = parse_bool(name, v); },
            [ref](const RunConfig& c) { return format_bool(ref(const_cast<RunConfig&>(c))); }};
  } else {
    return {name, std::move(help),
            [name, ref](RunConfig& c, const std::string& v) { ref(c) = parse_number<double>(name, v); },
            [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); }};
  }
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  k.push_back(nested_key<int>("levels", "pyramid levels", [](RunConfig& c) -> int& { return c.solver.levels; }));
  k.push_back(nested_key<int>("iters_per_level", "descent iterations per level",
                              [](RunConfig& c) -> int& { return c.solver.iters_per_level; }));
  k.push_back(nested_key<double>("step", "initial step size", [](RunConfig& c) -> double& { return c.solver.step; }));
  k.push_back(nested_key<int>("mask_refresh_every", "iterations between occlusion mask updates",
                              [](RunConfig& c) -> int& { return c.solver.mask_refresh_every; }));
  k.push_back(nested_key<double>("tolerance", "relative epoch decrease below which a level stops early",
                                 [](RunConfig& c) -> double& { return c.solver.tolerance; }));
  k.push_back({"refs", "reference views, comma separated (Lt,Rt,Lt1,Rt1)",
               [](RunConfig& c, const std::string& v) { c.solver.refs = parse_view_list(v); },
               [](const RunConfig& c) { return format_view_list(c.solver.refs); }});
  k.push_back({"init", "field initialization: zero | costvol",
               [](RunConfig& c, const std::string& v) { c.solver.init = parse_init_mode(v); },
               [](const RunConfig& c) { return init_mode_name(c.solver.init); }});
  k.push_back(nested_key<int>("costvol_radius", "cost-volume search radius at the coarsest level",
                              [](RunConfig& c) -> int& { return c.solver.costvol_radius; }));
  k.push_back(nested_key<bool>("grayscale", "convert inputs to grayscale before census",
                               [](RunConfig& c) -> bool& { return c.solver.grayscale; }));
  k.push_back(nested_key<double>("lambda_occ", "occlusion penalty",
                                 [](RunConfig& c) -> double& { return c.solver.loss.weights.lambda_occ; }));
  k.push_back(nested_key<double>("lambda_smooth", "smoothness weight",
                                 [](RunConfig& c) -> double& { return c.solver.loss.weights.lambda_smooth; }));
  k.push_back(nested_key<int>("census_patch", "census patch size (odd)",
                              [](RunConfig& c) -> int& { return c.solver.loss.census.patch; }));
  k.push_back({"census_mode", "census mode: soft | hard",
               [](RunConfig& c, const std::string& v) {
                 if (v == "soft") c.solver.loss.census.mode = CensusMode::Soft;
                 else if (v == "hard") c.solver.loss.census.mode = CensusMode::Hard;
                 else throw InvalidInput("config: census_mode must be soft or hard, got '" + v + "'");
               },
               [](const RunConfig& c) {
                 return std::string(c.solver.loss.census.mode == CensusMode::Soft ? "soft" : "hard");
               }});
  k.push_back(nested_key<double>("census_sigma2", "soft census squashing constant",
                                 [](RunConfig& c) -> double& { return c.solver.loss.census.sigma2; }));
  k.push_back(nested_key<double>("census_tau", "hard census threshold",
                                 [](RunConfig& c) -> double& { return c.solver.loss.census.tau; }));
  k.push_back(nested_key<double>("soft_hamming_c", "soft Hamming constant",
                                 [](RunConfig& c) -> double& { return c.solver.loss.census.soft_hamming_c; }));
  k.push_back(nested_key<double>("charbonnier_epsilon", "Charbonnier epsilon",
                                 [](RunConfig& c) -> double& { return c.solver.loss.rho.epsilon; }));
  k.push_back(nested_key<double>("charbonnier_gamma", "Charbonnier exponent",
                                 [](RunConfig& c) -> double& { return c.solver.loss.rho.gamma; }));
  k.push_back(nested_key<double>("alpha1", "consistency check relative tolerance",
                                 [](RunConfig& c) -> double& { return c.solver.consistency.alpha1; }));
  k.push_back(nested_key<double>("alpha2", "consistency check absolute tolerance (px^2)",
                                 [](RunConfig& c) -> double& { return c.solver.consistency.alpha2; }));
  k.push_back({"seed", "random seed (fixtures, selfcheck)",
               [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
               [](const RunConfig& c) { return std::to_string(c.seed); }});
  k.push_back(bool_key("progress", "print one line per solver iteration", &RunConfig::progress));
  k.push_back(string_key("lt", "left image at t", &RunConfig::lt));
  k.push_back(string_key("rt", "right image at t", &RunConfig::rt));
  k.push_back(string_key("lt1", "left image at t+1", &RunConfig::lt1));
  k.push_back(string_key("rt1", "right image at t+1", &RunConfig::rt1));
  k.push_back(string_key("fixture", "constructed input instead of images: none | constant | static | square",
                         &RunConfig::fixture));
  k.push_back(int_key("fixture_size", "side length of constructed fixtures", &RunConfig::fixture_size));
  k.push_back(string_key("fields_dir", "directory holding Lt.sff, Rt.sff, Lt1.sff, Rt1.sff", &RunConfig::fields_dir));
  k.push_back(string_key("pred_flow", "predicted flow (KITTI PNG)", &RunConfig::pred_flow));
  k.push_back(string_key("pred_disp0", "predicted disparity at t (KITTI PNG)", &RunConfig::pred_disp0));
  k.push_back(string_key("pred_disp1", "predicted disparity at t+1 (KITTI PNG)", &RunConfig::pred_disp1));
  k.push_back(string_key("gt_flow", "ground-truth flow (KITTI PNG)", &RunConfig::gt_flow));
  k.push_back(string_key("gt_disp0", "ground-truth disparity at t (KITTI PNG)", &RunConfig::gt_disp0));
  k.push_back(string_key("gt_disp1", "ground-truth disparity at t+1 (KITTI PNG)", &RunConfig::gt_disp1));
  k.push_back(string_key("data_dir", "benchmark root with image_2/ and image_3/", &RunConfig::data_dir));
  k.push_back(string_key("output_dir", "directory for written artifacts", &RunConfig::output_dir));
  k.push_back(string_key("csv", "benchmark CSV path (stdout when empty)", &RunConfig::csv));
  k.push_back(bool_key("kitti_output", "solve: also write KITTI-format PNGs", &RunConfig::kitti_output));
  k.push_back(double_key("max_flow", "viz: flow magnitude mapped to full saturation (0 = auto)", &RunConfig::max_flow));
  k.push_back(double_key("max_disp", "viz: disparity mapped to white (0 = auto)", &RunConfig::max_disp));
  k.push_back(int_key("jobs", "benchmark: samples processed concurrently", &RunConfig::jobs));
  k.push_back(bool_key("loss_only", "benchmark: report self-supervised loss only", &RunConfig::loss_only));
  k.push_back(int_key("selfcheck_quads", "selfcheck: random quadruplets in the gradient suite",
                      &RunConfig::selfcheck_quads));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw InvalidInput("config: unknown key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidInput& e) {
      throw InvalidInput("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& k : config_keys()) os << "# " << k.help << "\n" << k.name << " = " << k.get(cfg) << "\n";
  return os.str();
}

std::set<ViewId> parse_view_list(const std::string& s) {
  std::set<ViewId> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.insert(parse_view(item));
  }
  require(!out.empty(), "empty view list");
  return out;
}

std::string format_view_list(const std::set<ViewId>& views) {
  std::string out;
  for (ViewId v : views) {
    if (!out.empty()) out += ",";
    out += view_name(v);
  }
  return out;
}

}  // namespace ssflow
