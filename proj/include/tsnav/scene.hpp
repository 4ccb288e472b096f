#pragma once

#include "tsnav/geometry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tsnav {

struct Cell {
    int i = 0;
    int j = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct CellHash {
    std::size_t operator()(const Cell& c) const {
        return std::hash<std::int64_t>()((std::int64_t(c.i) << 32) ^ std::uint32_t(c.j));
    }
};

struct NearFar {
    double nearDist = 1.0;
    double farDist = 4.0;
    friend bool operator==(const NearFar&, const NearFar&) = default;
};

struct SceneConfig {
    double gridStep = 0.25;
    int rotStep = 90;
    std::vector<int> pitchLevels = {-30, 0, 30};  // -30 looks down (overhead view)
    double fovHalfAngle = 45.0;
    std::map<int, NearFar> frustumNearFar = {{-30, {0.25, 3.0}}, {0, {1.0, 4.0}}, {30, {1.0, 4.0}}};
    double successRadius = 1.0;
    int maxEpisodeLength = 100;

    void validate() const;
    const NearFar& nearFarFor(int pitch) const;
    int yawCount() const { return 360 / rotStep; }

    friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct ObjectInstance {
    std::string category;
    Point2 position;
};

struct Pose {
    Cell cell;
    int yawDeg = 0;   // compass: 0 = +y, 90 = +x
    int pitchDeg = 0;
    friend bool operator==(const Pose&, const Pose&) = default;
};

struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool contains(Point2 p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
};

class Scene {
  public:
    std::string id;
    Polygon roomBounds;
    std::vector<Rect> obstacles;
    std::vector<ObjectInstance> objects;
    SceneConfig config;

    /// Recomputes reachableCells from roomBounds/obstacles and checks invariants.
    void finalize();

    const std::vector<Cell>& reachableCells() const { return cells_; }
    bool isReachable(Cell c) const { return cellSet_.count(c) > 0; }
    int cellIndex(Cell c) const;
    Point2 cellCenter(Cell c) const {
        return {(c.i + 0.5) * config.gridStep, (c.j + 0.5) * config.gridStep};
    }
    std::optional<Cell> cellAt(Point2 p) const;

  private:
    std::vector<Cell> cells_;
    std::unordered_map<Cell, int, CellHash> cellSet_;
};

std::pair<Point2, double> poseToWorld(const Pose& pose, const SceneConfig& config);

struct GenParams {
    double roomMin = 4.0;  // meters, each side
    double roomMax = 8.0;
    int obstaclesMin = 0;
    int obstaclesMax = 3;
    int objectsMin = 1;
    int objectsMax = 3;
    bool allowNotch = true;
    std::vector<std::string> categories = {"Television", "Microwave", "AlarmClock",
                                           "Laptop",     "Bowl",      "GarbageCan"};
    SceneConfig config;
};

/// Deterministic for a fixed (seed, params). Throws std::runtime_error when
/// retries are exhausted.
Scene generateScene(std::uint64_t seed, const GenParams& params);

Scene loadScene(const std::string& path);
void saveScene(const Scene& scene, const std::string& path);

std::string sceneToJson(const Scene& scene);
Scene sceneFromJson(const std::string& text);

}  // namespace tsnav
