#include "tsnav/scene.hpp"
#include "tsnav/perception.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

namespace tsnav {

using ordered_json = nlohmann::ordered_json;

void SceneConfig::validate() const {
    if (!(gridStep > 0)) throw std::runtime_error("validation error: gridStep must be > 0");
    if (rotStep <= 0 || 360 % rotStep != 0)
        throw std::runtime_error("validation error: rotStep must divide 360");
    if (pitchLevels.empty() || !std::is_sorted(pitchLevels.begin(), pitchLevels.end()) ||
        std::adjacent_find(pitchLevels.begin(), pitchLevels.end()) != pitchLevels.end())
        throw std::runtime_error("validation error: pitchLevels must be strictly increasing");
    if (std::find(pitchLevels.begin(), pitchLevels.end(), 0) == pitchLevels.end())
        throw std::runtime_error("validation error: pitchLevels must contain 0");
    if (!(successRadius > 0)) throw std::runtime_error("validation error: successRadius must be > 0");
    if (maxEpisodeLength <= 0)
        throw std::runtime_error("validation error: maxEpisodeLength must be > 0");
    for (int p : pitchLevels)
        if (!frustumNearFar.count(p))
            throw std::runtime_error("validation error: missing frustumNearFar for pitch " +
                                     std::to_string(p));
}

const NearFar& SceneConfig::nearFarFor(int pitch) const {
    auto it = frustumNearFar.find(pitch);
    if (it == frustumNearFar.end())
        throw std::runtime_error("no frustum config for pitch " + std::to_string(pitch));
    return it->second;
}

int Scene::cellIndex(Cell c) const {
    auto it = cellSet_.find(c);
    return it == cellSet_.end() ? -1 : it->second;
}

std::optional<Cell> Scene::cellAt(Point2 p) const {
    Cell c{int(std::floor(p.x / config.gridStep)), int(std::floor(p.y / config.gridStep))};
    if (isReachable(c)) return c;
    return std::nullopt;
}

void Scene::finalize() {
    config.validate();
    if (roomBounds.outer.size() < 3)
        throw std::runtime_error("validation error: roomBounds needs >= 3 vertices");

    double xmax = 0, ymax = 0;
    for (const Point2& p : roomBounds.outer) {
        xmax = std::max(xmax, p.x);
        ymax = std::max(ymax, p.y);
    }

    cells_.clear();
    cellSet_.clear();
    const double g = config.gridStep;
    const int ni = int(std::ceil(xmax / g)), nj = int(std::ceil(ymax / g));
    for (int i = 0; i < ni; ++i) {
        for (int j = 0; j < nj; ++j) {
            Point2 center{(i + 0.5) * g, (j + 0.5) * g};
            if (!roomBounds.contains(center)) continue;
            bool blocked = false;
            for (const Rect& r : obstacles)
                if (r.contains(center)) { blocked = true; break; }
            if (!blocked) cells_.push_back({i, j});
        }
    }
    std::sort(cells_.begin(), cells_.end());
    for (std::size_t k = 0; k < cells_.size(); ++k) cellSet_.emplace(cells_[k], int(k));

    if (cells_.empty()) throw std::runtime_error("validation error: no reachable cells");
    for (const ObjectInstance& o : objects) {
        if (o.category.empty())
            throw std::runtime_error("validation error: object with empty category");
        if (!roomBounds.contains(o.position))
            throw std::runtime_error("validation error: object '" + o.category +
                                     "' outside roomBounds");
    }
}

std::pair<Point2, double> poseToWorld(const Pose& pose, const SceneConfig& config) {
    Point2 p{(pose.cell.i + 0.5) * config.gridStep, (pose.cell.j + 0.5) * config.gridStep};
    return {p, double(pose.yawDeg)};
}

namespace {

bool connected(const Scene& s) {
    const auto& cells = s.reachableCells();
    if (cells.empty()) return false;
    std::unordered_set<Cell, CellHash> seen;
    std::deque<Cell> q{cells.front()};
    seen.insert(cells.front());
    while (!q.empty()) {
        Cell c = q.front();
        q.pop_front();
        for (Cell n : {Cell{c.i + 1, c.j}, Cell{c.i - 1, c.j}, Cell{c.i, c.j + 1}, Cell{c.i, c.j - 1}}) {
            if (s.isReachable(n) && seen.insert(n).second) q.push_back(n);
        }
    }
    return seen.size() == cells.size();
}

// Any pose within the success radius that sees the target.
bool targetReachable(const Scene& s, const ObjectInstance& obj) {
    for (const Cell& c : s.reachableCells()) {
        Point2 center = s.cellCenter(c);
        double dx = center.x - obj.position.x, dy = center.y - obj.position.y;
        if (std::hypot(dx, dy) > s.config.successRadius) continue;
        for (int yaw = 0; yaw < 360; yaw += s.config.rotStep)
            for (int pitch : s.config.pitchLevels)
                if (visible({c, yaw, pitch}, obj, s)) return true;
    }
    return false;
}

Polygon roomWithNotch(std::mt19937_64& rng, double w, double h, double g) {
    // corner notch keeps the outline rectilinear but non-convex
    std::uniform_int_distribution<int> coin(0, 3);
    if (coin(rng) == 0) return Polygon::rect(0, 0, w, h);
    const int maxNi = std::max(1, int(w / g) / 3), maxNj = std::max(1, int(h / g) / 3);
    std::uniform_int_distribution<int> di(1, maxNi), dj(1, maxNj);
    const double nw = di(rng) * g, nh = dj(rng) * g;
    Polygon p;
    switch (coin(rng)) {
        case 0:  // bottom-left
            p.outer = {{nw, 0}, {w, 0}, {w, h}, {0, h}, {0, nh}, {nw, nh}};
            break;
        case 1:  // bottom-right
            p.outer = {{0, 0}, {w - nw, 0}, {w - nw, nh}, {w, nh}, {w, h}, {0, h}};
            break;
        case 2:  // top-right
            p.outer = {{0, 0}, {w, 0}, {w, h - nh}, {w - nw, h - nh}, {w - nw, h}, {0, h}};
            break;
        default:  // top-left
            p.outer = {{0, 0}, {w, 0}, {w, h}, {nw, h}, {nw, h - nh}, {0, h - nh}};
            break;
    }
    return p;
}

}  // namespace

Scene generateScene(std::uint64_t seed, const GenParams& params) {
    params.config.validate();
    if (params.roomMin <= 0 || params.roomMax < params.roomMin)
        throw std::runtime_error("generation error: bad room size range");
    if (params.categories.empty())
        throw std::runtime_error("generation error: empty category list");

    std::mt19937_64 rng(seed);
    const double g = params.config.gridStep;

    for (int attempt = 0; attempt < 40; ++attempt) {
        Scene s;
        s.id = "scene-" + std::to_string(seed);
        s.config = params.config;

        const int minCells = std::max(2, int(params.roomMin / g));
        const int maxCells = std::max(minCells, int(params.roomMax / g));
        std::uniform_int_distribution<int> side(minCells, maxCells);
        const double w = side(rng) * g, h = side(rng) * g;
        s.roomBounds = params.allowNotch ? roomWithNotch(rng, w, h, g) : Polygon::rect(0, 0, w, h);

        std::uniform_int_distribution<int> obsCount(params.obstaclesMin, params.obstaclesMax);
        const int nObs = obsCount(rng);
        std::uniform_int_distribution<int> oi(0, std::max(0, int(w / g) - 2));
        std::uniform_int_distribution<int> oj(0, std::max(0, int(h / g) - 2));
        std::uniform_int_distribution<int> osz(1, 3);
        for (int k = 0; k < nObs; ++k) {
            const int x = oi(rng), y = oj(rng), sx = osz(rng), sy = osz(rng);
            s.obstacles.push_back({x * g, y * g, (x + sx) * g, (y + sy) * g});
        }

        try {
            s.finalize();
        } catch (const std::runtime_error&) {
            continue;
        }
        if (s.reachableCells().size() < 4 || !connected(s)) continue;

        std::uniform_int_distribution<int> objCount(params.objectsMin, params.objectsMax);
        const int nObj = std::min<int>(objCount(rng), int(params.categories.size()));
        std::vector<std::string> cats = params.categories;
        std::shuffle(cats.begin(), cats.end(), rng);

        bool ok = true;
        std::uniform_int_distribution<int> cellPick(0, int(s.reachableCells().size()) - 1);
        std::uniform_real_distribution<double> off(-0.2 * g, 0.2 * g);
        for (int k = 0; k < nObj && ok; ++k) {
            bool placed = false;
            for (int tries = 0; tries < 50 && !placed; ++tries) {
                Cell c = s.reachableCells()[cellPick(rng)];
                Point2 center = s.cellCenter(c);
                ObjectInstance obj{cats[k], {center.x + off(rng), center.y + off(rng)}};
                if (!targetReachable(s, obj)) continue;
                s.objects.push_back(obj);
                placed = true;
            }
            ok = placed;
        }
        if (!ok || s.objects.empty()) continue;

        s.finalize();
        return s;
    }
    throw std::runtime_error("generation error: retries exhausted for seed " +
                             std::to_string(seed));
}

std::string sceneToJson(const Scene& scene) {
    ordered_json j;
    j["id"] = scene.id;
    ordered_json cfg;
    cfg["gridStep"] = scene.config.gridStep;
    cfg["rotStep"] = scene.config.rotStep;
    cfg["pitchLevels"] = scene.config.pitchLevels;
    cfg["fovHalfAngle"] = scene.config.fovHalfAngle;
    ordered_json nf = ordered_json::array();
    for (const auto& [pitch, p] : scene.config.frustumNearFar)
        nf.push_back({pitch, p.nearDist, p.farDist});
    cfg["frustumNearFar"] = nf;
    cfg["successRadius"] = scene.config.successRadius;
    cfg["maxEpisodeLength"] = scene.config.maxEpisodeLength;
    j["config"] = cfg;
    ordered_json rb = ordered_json::array();
    for (const Point2& p : scene.roomBounds.outer) rb.push_back({p.x, p.y});
    j["roomBounds"] = rb;
    ordered_json obs = ordered_json::array();
    for (const Rect& r : scene.obstacles) obs.push_back({r.x0, r.y0, r.x1, r.y1});
    j["obstacles"] = obs;
    ordered_json objs = ordered_json::array();
    for (const ObjectInstance& o : scene.objects) {
        ordered_json jo;
        jo["category"] = o.category;
        jo["x"] = o.position.x;
        jo["y"] = o.position.y;
        objs.push_back(jo);
    }
    j["objects"] = objs;
    return j.dump(2) + "\n";
}

Scene sceneFromJson(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("parse error: ") + e.what());
    }
    Scene s;
    try {
        s.id = j.at("id").get<std::string>();
        const auto& cfg = j.at("config");
        s.config.gridStep = cfg.at("gridStep").get<double>();
        s.config.rotStep = cfg.at("rotStep").get<int>();
        s.config.pitchLevels = cfg.at("pitchLevels").get<std::vector<int>>();
        s.config.fovHalfAngle = cfg.at("fovHalfAngle").get<double>();
        s.config.frustumNearFar.clear();
        for (const auto& row : cfg.at("frustumNearFar"))
            s.config.frustumNearFar[row.at(0).get<int>()] = {row.at(1).get<double>(),
                                                             row.at(2).get<double>()};
        s.config.successRadius = cfg.at("successRadius").get<double>();
        s.config.maxEpisodeLength = cfg.at("maxEpisodeLength").get<int>();
        for (const auto& v : j.at("roomBounds"))
            s.roomBounds.outer.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        for (const auto& r : j.at("obstacles"))
            s.obstacles.push_back({r.at(0).get<double>(), r.at(1).get<double>(),
                                   r.at(2).get<double>(), r.at(3).get<double>()});
        for (const auto& o : j.at("objects"))
            s.objects.push_back(
                {o.at("category").get<std::string>(),
                 {o.at("x").get<double>(), o.at("y").get<double>()}});
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("parse error: ") + e.what());
    }
    s.finalize();
    return s;
}

Scene loadScene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse error: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return sceneFromJson(ss.str());
}

void saveScene(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << sceneToJson(scene);
}

}  // namespace tsnav
