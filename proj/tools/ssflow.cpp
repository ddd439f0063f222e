#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ssflow/config.hpp"
#include "ssflow/error.hpp"
#include "ssflow/field_io.hpp"
#include "ssflow/image_io.hpp"
#include "ssflow/kitti.hpp"
#include "ssflow/loss.hpp"
#include "ssflow/occlusion.hpp"
#include "ssflow/selfcheck.hpp"
#include "ssflow/simd/kernels.hpp"
#include "ssflow/solver.hpp"
#include "ssflow/synth.hpp"

namespace fs = std::filesystem;
using namespace ssflow;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

std::string dashed(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

std::string mask_file_name(const ViewPair& p) {
  return "mask_" + view_name(p.first) + "_" + view_name(p.second) + ".png";
}

// ---------------------------------------------------------------- inputs

std::optional<synth::Scene> fixture_scene(const RunConfig& cfg) {
  const int n = cfg.fixture_size;
  if (cfg.fixture == "none" || cfg.fixture.empty()) return std::nullopt;
  require(n >= 16, "fixture_size must be >= 16");
  if (cfg.fixture == "constant") return synth::constant_motion_scene(n, n, synth::ConstantMotion{}, cfg.seed);
  if (cfg.fixture == "static") return synth::static_scene(n, n, cfg.seed);
  if (cfg.fixture == "square")
    return synth::moving_square_scene(n, n, synth::random_square_motion(n, n, cfg.seed), cfg.seed);
  throw InvalidInput("fixture must be none, constant, static or square, got '" + cfg.fixture + "'");
}

StereoQuadruplet load_quadruplet(const RunConfig& cfg, const std::optional<synth::Scene>& scene) {
  if (scene) return scene->images;
  require(!cfg.lt.empty() && !cfg.rt.empty() && !cfg.lt1.empty() && !cfg.rt1.empty(),
          "need --lt, --rt, --lt1 and --rt1 (or --fixture)");
  return StereoQuadruplet(load_image(cfg.lt), load_image(cfg.rt), load_image(cfg.lt1), load_image(cfg.rt1));
}

FieldSet load_fields(const std::string& dir) {
  require(!dir.empty(), "need --fields-dir");
  FieldSet out;
  for (ViewId v : kAllViews) {
    const std::string p = field_path(dir, v);
    if (!fs::exists(p)) continue;
    SceneFlowField f = read_field(p);
    if (f.reference != v) throw FormatError(p + ": stored view is " + view_name(f.reference));
    out[v] = std::move(f);
  }
  if (out.empty()) throw FormatError("no .sff fields found in " + dir);
  return out;
}

bool has_all_views(const FieldSet& f) { return f.size() == kAllViews.size(); }

MaskSet masks_for(const FieldSet& fields, const std::set<ViewId>& refs, const ConsistencyParams& p) {
  MaskSet out;
  for (ViewId ref : refs) {
    for (auto& [pair, m] : occlusion_masks_for_reference(fields, ref, p)) out[pair] = std::move(m);
  }
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_solve(const RunConfig& cfg) {
  const auto scene = fixture_scene(cfg);
  const StereoQuadruplet q = load_quadruplet(cfg, scene);
  ProgressCallback progress;
  if (cfg.progress) progress = [](const IterationRecord& r) { std::cerr << r.to_line() << "\n"; };
  const SolveResult res = solve(q, cfg.solver, progress);

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  for (const auto& [v, f] : res.fields) write_field(field_path(out.string(), v), f);
  for (const auto& [pair, m] : res.masks) save_mask_png((out / mask_file_name(pair)).string(), m);
  {
    std::ofstream h(out / "history.csv");
    h << "level,iter,total,data,smooth,penalty,step,mask_refresh\n";
    h.precision(17);
    for (const auto& r : res.history)
      h << r.level << "," << r.iter << "," << r.total << "," << r.data << "," << r.smooth << ","
        << r.penalty << "," << r.step << "," << (r.mask_refresh ? 1 : 0) << "\n";
    if (!h) throw FormatError("cannot write " + (out / "history.csv").string());
  }
  {
    std::ofstream l(out / "loss.txt");
    l << res.final_loss.to_report() << "converged=" << (res.converged ? "true" : "false") << "\n";
  }
  if (cfg.kitti_output) {
    const kitti::GroundTruthSceneFlow k = kitti::from_field(res.fields.at(kLeftT));
    kitti::write_flow((out / "flow.png").string(), k.flow);
    kitti::write_disparity((out / "disp_0.png").string(), k.disp_t);
    kitti::write_disparity((out / "disp_1.png").string(), k.disp_next);
  }

  std::cout << res.final_loss.to_report();
  std::cout << "converged=" << (res.converged ? "true" : "false") << "\n";
  std::cout << "iterations=" << res.history.size() << "\n";
  if (scene) {
    std::cout << std::fixed << std::setprecision(4);
    for (ViewId v : res.refs)
      std::cout << "epe_" << view_name(v) << "="
                << synth::field_epe(res.fields.at(v), scene->ground_truth.at(v), scene->non_occluded.at(v))
                << "\n";
  }
  std::cout << "output_dir=" << out.string() << "\n";
  return kOk;
}

SceneFlowField prediction(const RunConfig& cfg) {
  if (!cfg.fields_dir.empty()) {
    const FieldSet f = load_fields(cfg.fields_dir);
    if (!f.count(kLeftT)) throw FormatError("no Lt.sff in " + cfg.fields_dir);
    return f.at(kLeftT);
  }
  require(!cfg.pred_flow.empty() && !cfg.pred_disp0.empty() && !cfg.pred_disp1.empty(),
          "need --fields-dir or --pred-flow, --pred-disp0 and --pred-disp1");
  return kitti::to_field({kitti::read_flow(cfg.pred_flow), kitti::read_disparity(cfg.pred_disp0),
                          kitti::read_disparity(cfg.pred_disp1)});
}

kitti::GroundTruthSceneFlow ground_truth(const RunConfig& cfg) {
  if (const auto scene = fixture_scene(cfg)) return kitti::from_field(scene->ground_truth.at(kLeftT));
  require(!cfg.gt_flow.empty() && !cfg.gt_disp0.empty() && !cfg.gt_disp1.empty(),
          "need --gt-flow, --gt-disp0 and --gt-disp1 (or --fixture)");
  return {kitti::read_flow(cfg.gt_flow), kitti::read_disparity(cfg.gt_disp0),
          kitti::read_disparity(cfg.gt_disp1)};
}

int cmd_eval(const RunConfig& cfg) {
  const kitti::GroundTruthSceneFlow gt = ground_truth(cfg);
  const SceneFlowField pred = prediction(cfg);
  require(pred.height() == gt.height() && pred.width() == gt.width(),
          "prediction and ground truth sizes differ");
  std::cout << kitti::evaluate(pred, gt).to_report();
  return kOk;
}

int cmd_loss(const RunConfig& cfg) {
  const auto scene = fixture_scene(cfg);
  const StereoQuadruplet q = load_quadruplet(cfg, scene);
  const FieldSet fields = load_fields(cfg.fields_dir);
  for (ViewId ref : cfg.solver.refs)
    require(fields.count(ref) > 0, "missing field for reference " + view_name(ref));
  // Consistency masks need all four fields; otherwise every pixel is visible.
  const bool consistency = has_all_views(fields);
  const MaskSet masks = consistency ? masks_for(fields, cfg.solver.refs, cfg.solver.consistency)
                                    : all_visible_masks(cfg.solver.refs, q.height(), q.width());
  const StereoQuadruplet input = cfg.solver.grayscale ? q.grayscale() : q;
  const LossBreakdown b = total_loss(input, fields, cfg.solver.refs, masks, cfg.solver.loss);
  if (!std::isfinite(b.total)) throw NumericalError("loss is not finite");
  std::cout << b.to_report();
  std::cout << "masks=" << (consistency ? "consistency" : "all_visible") << "\n";
  return kOk;
}

int cmd_occlusion(const RunConfig& cfg) {
  const FieldSet fields = load_fields(cfg.fields_dir);
  require(has_all_views(fields), "occlusion needs all four fields in --fields-dir");
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  for (const auto& [pair, m] : masks_for(fields, cfg.solver.refs, cfg.solver.consistency)) {
    const std::string p = (out / mask_file_name(pair)).string();
    save_mask_png(p, m);
    std::cout << pair_name(pair) << " visible=" << m.count() << "/" << m.pixel_count() << " file=" << p
              << "\n";
  }
  return kOk;
}

double max_flow_magnitude(const Grid& flow) {
  double m = 0.0;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) m = std::max(m, std::hypot(flow.at(y, x, 0), flow.at(y, x, 1)));
  return m > 0.0 ? m : 1.0;
}

double max_value(const Grid& g) {
  double m = 0.0;
  for (double v : g.data()) m = std::max(m, v);
  return m > 0.0 ? m : 1.0;
}

void write_viz(const fs::path& out, const std::string& tag, const Grid& flow, const ScalarField& disp,
               const RunConfig& cfg) {
  const double mf = cfg.max_flow > 0.0 ? cfg.max_flow : max_flow_magnitude(flow);
  const double md = cfg.max_disp > 0.0 ? cfg.max_disp : max_value(disp);
  const std::string fp = (out / ("flow_" + tag + ".png")).string();
  const std::string dp = (out / ("disp_" + tag + ".png")).string();
  save_png8(fp, kitti::flow_to_color(flow, mf));
  save_png8(dp, kitti::disparity_to_gray(disp, md));
  std::cout << fp << " max_flow=" << mf << "\n" << dp << " max_disp=" << md << "\n";
}

int cmd_viz(const RunConfig& cfg) {
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  if (!cfg.fields_dir.empty()) {
    for (const auto& [v, f] : load_fields(cfg.fields_dir)) {
      Grid flow(f.height(), f.width(), 2);
      flow.set_channel(0, f.values.channel(SceneFlowField::U));
      flow.set_channel(1, f.values.channel(SceneFlowField::V));
      write_viz(out, view_name(v), flow, f.values.channel(SceneFlowField::DispRef), cfg);
    }
    return kOk;
  }
  require(!cfg.pred_flow.empty() || !cfg.pred_disp0.empty(),
          "need --fields-dir, --pred-flow or --pred-disp0");
  if (!cfg.pred_flow.empty()) {
    const kitti::FlowMap f = kitti::read_flow(cfg.pred_flow);
    const double mf = cfg.max_flow > 0.0 ? cfg.max_flow : max_flow_magnitude(f.flow);
    const std::string p = (out / "flow.png").string();
    save_png8(p, kitti::flow_to_color(f.flow, mf));
    std::cout << p << " max_flow=" << mf << "\n";
  }
  if (!cfg.pred_disp0.empty()) {
    const kitti::DisparityMap d = kitti::read_disparity(cfg.pred_disp0);
    const double md = cfg.max_disp > 0.0 ? cfg.max_disp : max_value(d.disparity);
    const std::string p = (out / "disp.png").string();
    save_png8(p, kitti::disparity_to_gray(d.disparity, md));
    std::cout << p << " max_disp=" << md << "\n";
  }
  return kOk;
}

int cmd_selfcheck(const RunConfig& cfg) {
  selfcheck::GradientOptions g;
  g.quads = cfg.selfcheck_quads;
  g.seed = cfg.seed;
  require(g.quads >= 1, "selfcheck_quads must be >= 1");
  const std::string scratch = (fs::path(cfg.output_dir) / "selfcheck").string();
  std::cout << "simd=" << simd::kernels().name << "\n";
  const std::vector<selfcheck::SuiteResult> suites = {
      selfcheck::gradient_suite(g),        selfcheck::invariance_suite(cfg.seed),
      selfcheck::occlusion_penalty_suite(cfg.seed), selfcheck::consistency_suite(),
      selfcheck::roundtrip_suite(cfg.seed, scratch)};
  bool ok = true;
  for (const auto& s : suites) {
    std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
    ok = ok && s.passed;
  }
  std::cout << "selfcheck=" << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kOk : kNumerical;
}

// ---------------------------------------------------------------- benchmark

struct SampleResult {
  std::string name;
  std::optional<kitti::MetricReport> metrics;
  double loss_per_pixel = 0.0;
  std::string error;
};

SampleResult run_sample(const RunConfig& cfg, const std::string& seq) {
  SampleResult r{seq, std::nullopt, 0.0, ""};
  const fs::path root(cfg.data_dir);
  const auto img = [&](const char* dir, const char* frame) {
    return load_image((root / dir / (seq + frame)).string());
  };
  try {
    const StereoQuadruplet q(img("image_2", "_10.png"), img("image_3", "_10.png"), img("image_2", "_11.png"),
                             img("image_3", "_11.png"));
    const SolveResult res = solve(q, cfg.solver);
    r.loss_per_pixel = res.final_loss.mean_per_pixel();
    const fs::path flow = root / "flow_occ" / (seq + "_10.png");
    const fs::path d0 = root / "disp_occ_0" / (seq + "_10.png");
    const fs::path d1 = root / "disp_occ_1" / (seq + "_10.png");
    if (!cfg.loss_only && fs::exists(flow) && fs::exists(d0) && fs::exists(d1)) {
      const kitti::GroundTruthSceneFlow gt{kitti::read_flow(flow.string()), kitti::read_disparity(d0.string()),
                                           kitti::read_disparity(d1.string())};
      r.metrics = kitti::evaluate(res.fields.at(kLeftT), gt);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

int cmd_benchmark(const RunConfig& cfg) {
  require(!cfg.data_dir.empty(), "need --data-dir");
  require(cfg.jobs >= 1, "jobs must be >= 1");
  const fs::path left = fs::path(cfg.data_dir) / "image_2";
  if (!fs::is_directory(left)) throw FormatError("missing directory " + left.string());
  std::vector<std::string> seqs;
  for (const auto& e : fs::directory_iterator(left)) {
    const std::string n = e.path().filename().string();
    if (n.size() > 7 && n.ends_with("_10.png")) seqs.push_back(n.substr(0, n.size() - 7));
  }
  std::sort(seqs.begin(), seqs.end());
  require(!seqs.empty(), "no {seq}_10.png samples in " + left.string());

  // Workers pull indices; results land in fixed slots so output order is stable.
  std::vector<SampleResult> results(seqs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < seqs.size(); i = next++) results[i] = run_sample(cfg, seqs[i]);
  };
  const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(seqs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  const bool metrics = !cfg.loss_only;
  csv << "sample,loss_per_pixel";
  if (metrics) csv << "," << kitti::MetricReport::csv_header();
  csv << ",error\n";
  csv << std::fixed << std::setprecision(6);
  double loss_sum = 0.0;
  std::size_t loss_n = 0, metric_n = 0, failed = 0;
  kitti::MetricReport agg;
  for (const auto& r : results) {
    csv << r.name << ",";
    if (r.error.empty()) {
      csv << r.loss_per_pixel;
      loss_sum += r.loss_per_pixel;
      ++loss_n;
    }
    if (metrics) {
      csv << ",";
      if (r.metrics) {
        csv << r.metrics->csv_row();
        agg.epe_all += r.metrics->epe_all;
        agg.epe_flow += r.metrics->epe_flow;
        agg.epe_disp_t += r.metrics->epe_disp_t;
        agg.epe_disp_next += r.metrics->epe_disp_next;
        agg.d1 += r.metrics->d1;
        agg.d2 += r.metrics->d2;
        agg.fl += r.metrics->fl;
        agg.sf += r.metrics->sf;
        agg.epe_pixels += r.metrics->epe_pixels;
        ++metric_n;
      } else {
        csv << ",,,,,,,,,";
      }
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    csv << "," << err << "\n";
    if (!r.error.empty()) ++failed;
  }
  csv << "mean," << (loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0);
  if (metrics) {
    csv << ",";
    if (metric_n) {
      const double k = static_cast<double>(metric_n);
      agg.epe_all /= k;
      agg.epe_flow /= k;
      agg.epe_disp_t /= k;
      agg.epe_disp_next /= k;
      agg.d1 /= k;
      agg.d2 /= k;
      agg.fl /= k;
      agg.sf /= k;
      agg.koe_all = agg.sf;
      csv << agg.csv_row();
    } else {
      csv << ",,,,,,,,,";
    }
  }
  csv << ",\n";

  if (cfg.csv.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(cfg.csv);
    f << csv.str();
    if (!f) throw FormatError("cannot write " + cfg.csv);
    std::cout << "samples=" << results.size() << " failed=" << failed << " csv=" << cfg.csv << "\n";
  }
  return failed ? kIo : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised scene flow by direct loss minimization"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  bool dump = false;
  std::map<std::string, std::string> overrides;
  std::vector<CLI::Option*> key_options;
  app.add_option("--config", config_path, "configuration file (default: $SSFLOW_CONFIG)");
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");
  for (const auto& k : config_keys())
    key_options.push_back(app.add_option("--" + dashed(k.name), overrides[k.name], k.help));

  const std::map<std::string, int (*)(const RunConfig&)> commands = {
      {"solve", cmd_solve},         {"eval", cmd_eval},           {"loss", cmd_loss},
      {"occlusion", cmd_occlusion}, {"viz", cmd_viz},             {"selfcheck", cmd_selfcheck},
      {"benchmark", cmd_benchmark}};
  const std::map<std::string, std::string> descriptions = {
      {"solve", "estimate the four scene-flow fields of a quadruplet"},
      {"eval", "KITTI metrics of a prediction against ground truth"},
      {"loss", "loss breakdown of given fields, no optimization"},
      {"occlusion", "per-pair consistency masks of given fields as PNG"},
      {"viz", "color PNGs of flow and disparity"},
      {"selfcheck", "gradient, invariance and round-trip oracles"},
      {"benchmark", "solve every sample of a KITTI-style directory, CSV report"}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, descriptions.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg;
    if (config_path.empty()) {
      if (const char* env = std::getenv("SSFLOW_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    const auto& keys = config_keys();
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (key_options[i]->count() > 0) set_config_value(cfg, keys[i].name, overrides[keys[i].name]);
    if (dump) {
      std::cout << dump_config(cfg);
      return kOk;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kUsage;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    return commands.at(name)(cfg);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  }
}
