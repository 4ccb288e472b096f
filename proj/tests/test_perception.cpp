#include "tsnav/perception.hpp"
#include "testkit.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace tsnav;

namespace {

Scene blockedRoomScene() {
    // 3 m x 1 m room, two cell rows at gridStep 0.5; the bottom row is walled
    // off in the middle so the straight sight line passes through dead cells.
    Scene s;
    s.id = "blocked";
    s.config.gridStep = 0.5;
    s.roomBounds = Polygon::rect(0, 0, 3.0, 1.0);
    s.obstacles.push_back({1.0, 0.0, 2.0, 0.5});
    s.objects.push_back({"Target", {2.75, 0.25}});
    s.finalize();
    return s;
}

}  // namespace

TEST_CASE("straight-ahead visibility band") {
    const Scene s = testkit::makeCorridorScene(12);  // 6 m long at 0.5 m cells
    const ObjectInstance& t = s.objects[0];          // center of cell 11: x = 5.75
    // distances from cell i (center x = i*0.5 + 0.25) to the target: 5.5 - 0.5 i
    CHECK(visible({{0, 0}, 90, 0}, t, s) == false);  // 5.5 m, beyond far
    CHECK(visible({{3, 0}, 90, 0}, t, s) == true);   // 4.0 m, on the far plane
    CHECK(visible({{5, 0}, 90, 0}, t, s) == true);   // 3.0 m
    CHECK(visible({{9, 0}, 90, 0}, t, s) == true);   // 1.0 m, on the near plane
    CHECK(visible({{10, 0}, 90, 0}, t, s) == false); // 0.5 m, under the near plane
    // target behind the agent
    CHECK(visible({{5, 0}, 270, 0}, t, s) == false);
    CHECK(visible({{5, 0}, 0, 0}, t, s) == false);
}

TEST_CASE("overhead pitch uses the short near plane") {
    const Scene s = testkit::makeCorridorScene(12);
    const ObjectInstance& t = s.objects[0];
    CHECK(visible({{10, 0}, 90, -30}, t, s) == true);   // 0.5 m in [0.25, 3]
    CHECK(visible({{4, 0}, 90, -30}, t, s) == false);   // 3.5 m, beyond overhead far
    CHECK(visible({{11, 0}, 90, -30}, t, s) == false);  // 0 m, under every near plane
    // looking up reuses the straight-ahead band
    CHECK(visible({{9, 0}, 90, 30}, t, s) == true);
    CHECK(visible({{10, 0}, 90, 30}, t, s) == false);
}

TEST_CASE("half-angle boundary is inclusive") {
    const Scene s = testkit::makeOpenRoomScene(8.0, 8.0, {4.125, 4.125});
    const Pose p{{8, 8}, 0, 0};  // world (2.125, 2.125), facing +y
    // target exactly on the 45-degree right edge of the frustum
    CHECK(visible(p, {"T", {4.125, 4.125}}, s) == true);
    // nudged outside the edge
    CHECK(visible(p, {"T", {4.2, 4.125}}, s) == false);
}

TEST_CASE("occlusion blocks the sight line through unreachable cells") {
    const Scene s = blockedRoomScene();
    const Pose p{{0, 0}, 90, 0};  // bottom-left, facing east, target 2.5 m away
    CHECK(visible(p, s.objects[0], s, true) == false);
    CHECK(visible(p, s.objects[0], s, false) == true);
    // the open top row still has line of sight
    CHECK(visible({{0, 1}, 90, 0}, {"T", {2.75, 0.75}}, s, true) == true);
}

TEST_CASE("supercover covers every cell the segment passes through") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 5.99);
    const double g = 0.25;
    for (int it = 0; it < 50; ++it) {
        const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const auto cells = supercoverCells(a, b, g);
        const std::set<std::pair<int, int>> cover = [&] {
            std::set<std::pair<int, int>> out;
            for (Cell c : cells) out.insert({c.i, c.j});
            return out;
        }();
        // dense sampling oracle: every sampled point lies in a covered cell
        for (int k = 0; k <= 4000; ++k) {
            const double s = k / 4000.0;
            const Point2 p{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
            const std::pair<int, int> cell{int(std::floor(p.x / g)), int(std::floor(p.y / g))};
            CHECK(cover.count(cell) == 1);
        }
        CHECK(cover.count({int(std::floor(a.x / g)), int(std::floor(a.y / g))}) == 1);
        CHECK(cover.count({int(std::floor(b.x / g)), int(std::floor(b.y / g))}) == 1);
    }
}

TEST_CASE("supercover through a lattice corner includes both side cells") {
    const auto cells = supercoverCells({0.25, 0.25}, {0.75, 0.75}, 0.5);
    std::set<std::pair<int, int>> cover;
    for (Cell c : cells) cover.insert({c.i, c.j});
    CHECK(cover == std::set<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}, {1, 1}});
}

TEST_CASE("binary and linear-falloff confidence values") {
    const Scene s = testkit::makeCorridorScene(12);
    const ObjectInstance& t = s.objects[0];
    DetectorConfig cfg;
    CHECK(noiselessConfidence({{5, 0}, 90, 0}, t, s, cfg) == 1.0);
    CHECK(noiselessConfidence({{0, 0}, 90, 0}, t, s, cfg) == 0.0);
    cfg.model = DetectorModel::LinearFalloff;
    CHECK(noiselessConfidence({{5, 0}, 90, 0}, t, s, cfg) ==
          doctest::Approx(1.0 - 3.0 / 4.0));  // default maxRange = straight far
    cfg.maxRange = 6.0;
    CHECK(noiselessConfidence({{5, 0}, 90, 0}, t, s, cfg) == doctest::Approx(0.5));
}

TEST_CASE("noise is deterministic and keyed by step, pose and seed") {
    const Scene s = testkit::makeCorridorScene(12);
    const ObjectInstance& t = s.objects[0];
    DetectorConfig cfg;
    cfg.model = DetectorModel::LinearFalloff;
    cfg.noiseSigma = 0.2;
    cfg.seed = 9;
    const Pose p{{5, 0}, 90, 0};
    CHECK(detect(p, t, s, cfg, 3).confidence == detect(p, t, s, cfg, 3).confidence);
    CHECK(detect(p, t, s, cfg, 3).confidence != detect(p, t, s, cfg, 4).confidence);
    CHECK(detect(p, t, s, cfg, 3).confidence != detect({{6, 0}, 90, 0}, t, s, cfg, 3).confidence);
    DetectorConfig other = cfg;
    other.seed = 10;
    CHECK(detect(p, t, s, cfg, 3).confidence != detect(p, t, s, other, 3).confidence);
    for (int step = 0; step < 200; ++step) {
        const double c = detect(p, t, s, cfg, step).confidence;
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("noiseless confidence ignores the noise settings") {
    const Scene s = testkit::makeCorridorScene(12);
    DetectorConfig quiet, noisy;
    noisy.noiseSigma = 0.3;
    noisy.seed = 77;
    CHECK(noiselessConfidence({{5, 0}, 90, 0}, s.objects[0], s, quiet) ==
          noiselessConfidence({{5, 0}, 90, 0}, s.objects[0], s, noisy));
}

TEST_CASE("detector config validation") {
    DetectorConfig cfg;
    cfg.noiseSigma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    cfg.noiseSigma = 0.6;
    CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    CHECK(detectorModelFromName(detectorModelName(DetectorModel::LinearFalloff)) ==
          DetectorModel::LinearFalloff);
    CHECK_THROWS_AS(detectorModelFromName("sonar"), std::runtime_error);
}
