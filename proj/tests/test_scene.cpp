#include "tsnav/scene.hpp"
#include "testkit.hpp"

#include <doctest.h>

#include <fstream>

using namespace tsnav;

namespace {

GenParams smallParams() {
    GenParams p;
    p.roomMin = 4.0;
    p.roomMax = 5.0;
    p.obstaclesMax = 2;
    return p;
}

}  // namespace

TEST_CASE("generation is deterministic for a fixed seed") {
    const GenParams p = smallParams();
    const Scene a = generateScene(11, p);
    const Scene b = generateScene(11, p);
    CHECK(sceneToJson(a) == sceneToJson(b));
}

TEST_CASE("reachable cell count matches the point-in-polygon oracle") {
    GenParams p = smallParams();
    p.roomMin = p.roomMax = 4.0;
    p.obstaclesMin = p.obstaclesMax = 0;
    p.allowNotch = false;
    const Scene s = generateScene(3, p);
    int count = 0;
    for (int i = -2; i < 40; ++i)
        for (int j = -2; j < 40; ++j) {
            const Point2 c{(i + 0.5) * 0.25, (j + 0.5) * 0.25};
            if (testkit::pointInPolygon(s.roomBounds, c)) ++count;
        }
    CHECK(int(s.reachableCells().size()) == count);
    CHECK(count == 16 * 16);
}

TEST_CASE("object count is honored") {
    GenParams p = smallParams();
    p.objectsMin = p.objectsMax = 1;
    const Scene s = generateScene(5, p);
    CHECK(s.objects.size() == 1);
}

TEST_CASE("save/load round-trips byte-exactly") {
    const Scene s = generateScene(21, smallParams());
    const std::string path = "roundtrip_scene.json";
    saveScene(s, path);
    const Scene loaded = loadScene(path);
    CHECK(sceneToJson(loaded) == sceneToJson(s));
    CHECK(loaded.reachableCells() == s.reachableCells());
}

TEST_CASE("round-trip is lossless over randomized scenes") {
    for (std::uint64_t seed : {1, 2, 8, 13, 34}) {
        const Scene s = generateScene(seed, smallParams());
        CHECK(sceneToJson(sceneFromJson(sceneToJson(s))) == sceneToJson(s));
    }
}

TEST_CASE("object outside roomBounds is a validation error") {
    Scene s = generateScene(4, smallParams());
    std::string text = sceneToJson(s);
    Scene bad = sceneFromJson(text);
    bad.objects.push_back({"Ghost", {-10.0, -10.0}});
    CHECK_THROWS_WITH_AS(bad.finalize(), doctest::Contains("validation error"),
                         std::runtime_error);
}

TEST_CASE("truncated file is a parse error") {
    const Scene s = generateScene(6, smallParams());
    const std::string text = sceneToJson(s);
    CHECK_THROWS_WITH_AS(sceneFromJson(text.substr(0, text.size() / 2)),
                         doctest::Contains("parse error"), std::runtime_error);
}

TEST_CASE("missing field names the problem") {
    CHECK_THROWS_WITH_AS(sceneFromJson("{\"id\":\"x\"}"), doctest::Contains("parse error"),
                         std::runtime_error);
}

TEST_CASE("poseToWorld definition") {
    SceneConfig cfg;
    cfg.gridStep = 0.25;
    auto [p1, h1] = poseToWorld({{0, 0}, 0, 0}, cfg);
    CHECK(p1.x == doctest::Approx(0.125));
    CHECK(p1.y == doctest::Approx(0.125));
    CHECK(h1 == 0.0);
    cfg.gridStep = 0.5;
    auto [p2, h2] = poseToWorld({{3, 1}, 270, 0}, cfg);
    CHECK(p2.x == doctest::Approx(1.75));
    CHECK(p2.y == doctest::Approx(0.75));
    CHECK(h2 == 270.0);
}

TEST_CASE("generated scenes are connected") {
    for (std::uint64_t seed : {100, 101, 102, 103, 104, 105}) {
        const Scene s = generateScene(seed, smallParams());
        // flood fill from the first cell
        std::unordered_set<Cell, CellHash> seen{s.reachableCells().front()};
        std::vector<Cell> stack{s.reachableCells().front()};
        while (!stack.empty()) {
            const Cell c = stack.back();
            stack.pop_back();
            for (Cell n : {Cell{c.i + 1, c.j}, Cell{c.i - 1, c.j}, Cell{c.i, c.j + 1},
                           Cell{c.i, c.j - 1}})
                if (s.isReachable(n) && seen.insert(n).second) stack.push_back(n);
        }
        CHECK(seen.size() == s.reachableCells().size());
    }
}

TEST_CASE("config invariants are enforced") {
    SceneConfig cfg;
    cfg.rotStep = 70;
    CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    cfg = SceneConfig{};
    cfg.pitchLevels = {-30, 30};  // missing 0
    CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
}
