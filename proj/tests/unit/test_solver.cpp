#include <doctest.h>

#include <cmath>

#include "ssflow/error.hpp"
#include "ssflow/solver.hpp"
#include "ssflow/synth.hpp"

using namespace ssflow;

TEST_CASE("configuration validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  const auto bad = [](auto edit) {
    SolverConfig b;
    edit(b);
    CHECK_THROWS_AS(b.validate(), InvalidInput);
  };
  bad([](SolverConfig& b) { b.levels = 0; });
  bad([](SolverConfig& b) { b.iters_per_level = 0; });
  bad([](SolverConfig& b) { b.step = 0.0; });
  bad([](SolverConfig& b) { b.step = std::nan(""); });
  bad([](SolverConfig& b) { b.mask_refresh_every = 0; });
  bad([](SolverConfig& b) { b.tolerance = -1e-3; });
  bad([](SolverConfig& b) { b.refs.clear(); });
  bad([](SolverConfig& b) { b.costvol_radius = -1; });
  bad([](SolverConfig& b) { b.loss.census.mode = CensusMode::Hard; });

  CHECK(parse_init_mode("zero") == InitMode::Zero);
  CHECK(parse_init_mode(init_mode_name(InitMode::CostVolumeArgmax)) == InitMode::CostVolumeArgmax);
  CHECK_THROWS_AS(parse_init_mode("random"), InvalidInput);
}

TEST_CASE("field upsampling") {
  SceneFlowField c(kRightT, 4, 5);
  for (double& v : c.values.data()) v = 1.5;
  const SceneFlowField u = upsample_field(c, 8, 10);
  CHECK(u.reference == kRightT);
  CHECK(u.height() == 8);
  CHECK(u.width() == 10);
  for (double v : u.values.data()) CHECK(v == 3.0);
  // odd target sizes are allowed
  CHECK(upsample_field(c, 9, 11).width() == 11);
  CHECK_THROWS_AS(upsample_field(c, 0, 10), InvalidInput);
}

TEST_CASE("static scene stays at rest") {
  const synth::Scene s = synth::static_scene(32, 32, 4);
  SolverConfig cfg;
  cfg.levels = 2;
  int calls = 0;
  const SolveResult r = solve(s.images, cfg, [&](const IterationRecord&) { ++calls; });
  CHECK(r.fields.size() == 4);
  CHECK(synth::mean_magnitude(r.fields.at(kLeftT)) < 0.05);
  CHECK(r.converged);
  CHECK(calls == static_cast<int>(r.history.size()));
  CHECK(r.history.back().level == 0);
  CHECK(r.history.front().level == 1);
  CHECK(r.masks.size() == 3);
  CHECK(std::isfinite(r.final_loss.total));
  CHECK(r.history.front().to_line().rfind("level=1 iter=0", 0) == 0);
}

TEST_CASE("constant motion is recovered") {
  const synth::Scene s = synth::constant_motion_scene(64, 64, synth::ConstantMotion{}, 1);
  const SolveResult r = solve(s.images, SolverConfig{});
  const double epe = synth::field_epe(r.fields.at(kLeftT), s.ground_truth.at(kLeftT), s.non_occluded.at(kLeftT));
  MESSAGE("constant-motion EPE " << epe);
  CHECK(epe < 0.5);
  // the energy never increases within a level
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    const auto& a = r.history[i - 1];
    const auto& b = r.history[i];
    if (a.level == b.level && !b.mask_refresh && !a.mask_refresh) CHECK(b.total <= a.total);
  }
}

TEST_CASE("cost-volume initialization") {
  const synth::Scene s = synth::constant_motion_scene(32, 32, synth::ConstantMotion{}, 2);
  SolverConfig cfg;
  cfg.levels = 2;
  cfg.init = InitMode::CostVolumeArgmax;
  const SolveResult r = solve(s.images, cfg);
  CHECK(synth::field_epe(r.fields.at(kLeftT), s.ground_truth.at(kLeftT), s.non_occluded.at(kLeftT)) < 0.5);
}

TEST_CASE("solves are deterministic") {
  const synth::Scene s = synth::constant_motion_scene(32, 32, synth::ConstantMotion{1, 0, 2, 2}, 3);
  SolverConfig cfg;
  cfg.levels = 2;
  cfg.iters_per_level = 30;
  cfg.refs = {kLeftT, kRightT};
  const SolveResult a = solve(s.images, cfg);
  const SolveResult b = solve(s.images, cfg);
  for (ViewId v : kAllViews) CHECK(a.fields.at(v).values == b.fields.at(v).values);
  CHECK(a.final_loss.total == b.final_loss.total);
  CHECK(a.masks.size() == 6);
}

TEST_CASE("bad inputs") {
  const synth::Scene s = synth::static_scene(32, 32, 5);
  SolverConfig cfg;
  cfg.levels = 4;  // coarsest level would be 4 px
  CHECK_THROWS_AS(solve(s.images, cfg), InvalidInput);

  ImageGrid nan_img = s.images.at(kLeftT);
  nan_img.at(5, 5) = std::nan("");
  const StereoQuadruplet q(nan_img, s.images.at(kRightT), s.images.at(kLeftT1), s.images.at(kRightT1));
  cfg.levels = 1;
  cfg.iters_per_level = 2;
  CHECK_THROWS_AS(solve(q, cfg), NumericalError);
}
