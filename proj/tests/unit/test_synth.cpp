#include <doctest.h>

#include <cmath>

#include "ssflow/error.hpp"
#include "ssflow/synth.hpp"

using namespace ssflow;
using namespace ssflow::synth;

namespace {

// Every visible pixel of every pair must find its own intensity at the
// integer target position.
void check_brightness_constancy(const Scene& s) {
  const int h = s.images.height(), w = s.images.width();
  for (ViewId v : kAllViews) {
    const PairDisplacements d = displacements_from_sceneflow(s.ground_truth.at(v));
    for (PairKind k : kAllPairKinds) {
      const ViewId t = partner(v, k);
      const Mask& vis = s.visible.at({v, t});
      const Grid& g = d.get(k).values;
      std::size_t bad = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!vis.at(y, x)) continue;
          const int tx = static_cast<int>(std::lround(x + g.at(y, x, 0)));
          const int ty = static_cast<int>(std::lround(y + g.at(y, x, 1)));
          if (std::abs(s.images.at(v).at(y, x) - s.images.at(t).at(ty, tx)) > 1e-12) ++bad;
        }
      CHECK(bad == 0);
    }
  }
}

}  // namespace

TEST_CASE("texture") {
  const Texture t(3);
  const ImageGrid a = t.render(20, 30);
  for (double v : a.data()) {
    CHECK(v >= 0.05);
    CHECK(v <= 0.95);
  }
  CHECK(Texture(3).render(20, 30) == a);
  CHECK_FALSE(Texture(4).render(20, 30) == a);
  CHECK(t.render(4, 4, 2.0, 1.0).at(0, 0) == t(2.0, 1.0));
  CHECK_THROWS_AS(Texture(1, 0), InvalidInput);
  CHECK_THROWS_AS(Texture(1, 4, 5.0, 2.0), InvalidInput);
}

TEST_CASE("constant motion scene") {
  const Scene s = constant_motion_scene(24, 32, ConstantMotion{3, 2, 4, 5}, 1);
  const SceneFlowField& lt = s.ground_truth.at(kLeftT);
  CHECK(lt.values.at(5, 5, SceneFlowField::U) == 3.0);
  CHECK(lt.values.at(5, 5, SceneFlowField::DispOther) == 5.0);
  CHECK(s.ground_truth.at(kLeftT1).values.at(0, 0, SceneFlowField::U) == -3.0);
  CHECK(s.visible.size() == 12);
  // target of the stereo pair leaves the frame in the first 4 columns
  CHECK_FALSE(s.non_occluded.at(kLeftT).at(10, 3));
  CHECK(s.non_occluded.at(kLeftT).at(10, 10));
  check_brightness_constancy(static_scene(16, 16, 2));
  CHECK_THROWS_AS(constant_motion_scene(0, 4, {}, 1), InvalidInput);
}

TEST_CASE("moving square scene") {
  const SquareMotion m;
  const Scene s = moving_square_scene(64, 64, m, 5);
  check_brightness_constancy(s);
  const SceneFlowField& lt = s.ground_truth.at(kLeftT);
  CHECK(lt.values.at(m.square_y + 1, m.square_x + 1, SceneFlowField::U) == m.u);
  CHECK(lt.values.at(m.square_y + 1, m.square_x + 1, SceneFlowField::DispRef) == m.square_disparity);
  CHECK(lt.values.at(1, 1, SceneFlowField::U) == 0.0);
  CHECK(lt.values.at(1, 1, SceneFlowField::DispRef) == m.background_disparity);
  // background uncovered behind the moving square is occluded at t+1
  CHECK_FALSE(s.visible.at({kLeftT, kLeftT1}).at(m.square_y + 5, m.square_x + m.square_size + 1));
  CHECK(s.visible.at({kLeftT, kLeftT1}).at(m.square_y + 5, m.square_x + 5));

  SquareMotion bad;
  bad.square_size = 0;
  CHECK_THROWS_AS(moving_square_scene(32, 32, bad, 1), InvalidInput);
}

TEST_CASE("random square motion stays in frame") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const SquareMotion m = random_square_motion(64, 64, seed);
    CHECK(m.square_disparity > m.background_disparity);
    CHECK(m.square_x - m.square_disparity >= 0);
    CHECK(m.square_x + m.square_size <= 64);
    CHECK(m.square_y + m.square_size <= 64);
    CHECK(std::abs(m.u) <= 4);
    const Scene s = moving_square_scene(64, 64, m, seed);
    check_brightness_constancy(s);
  }
  CHECK(random_square_motion(64, 64, 7).u == random_square_motion(64, 64, 7).u);
}

TEST_CASE("random data and field statistics") {
  const StereoQuadruplet q = random_quadruplet(8, 9, 3);
  CHECK(q.height() == 8);
  CHECK(q.width() == 9);
  for (ViewId v : kAllViews)
    for (double x : q.at(v).data()) {
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  const FieldSet f = random_fields(5, 5, 2.0, 4);
  CHECK(f.size() == 4);
  for (double x : f.at(kRightT1).values.data()) CHECK(std::abs(x) <= 2.0);
  CHECK(f.at(kRightT1).reference == kRightT1);

  SceneFlowField a(kLeftT, 2, 2), b(kLeftT, 2, 2);
  b.values.at(0, 0, 0) = 3.0;
  b.values.at(0, 0, 3) = 4.0;
  CHECK(field_epe(a, b, Mask(2, 2, true)) == 1.25);
  Mask one(2, 2, false);
  one.set(0, 0, true);
  CHECK(field_epe(a, b, one) == 5.0);
  CHECK(mean_magnitude(b) == 1.25);
  CHECK_THROWS_AS(field_epe(a, b, Mask(2, 2, false)), InvalidInput);
  CHECK_THROWS_AS(field_epe(a, SceneFlowField(kLeftT, 3, 2), Mask(2, 2, true)), InvalidInput);
}
