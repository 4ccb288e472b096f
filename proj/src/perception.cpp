#include "tsnav/perception.hpp"

#include <algorithm>
#include <cmath>

namespace tsnav {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hashCombine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL));
}

double toUnit(std::uint64_t h) { return (h >> 11) * 0x1.0p-53; }

// deterministic zero-mean gaussian keyed by (seed, scene, pose, step)
double hashedGaussian(std::uint64_t seed, const std::string& sceneId, const Pose& pose,
                      int stepIndex) {
    std::uint64_t h = splitmix64(seed);
    for (char c : sceneId) h = hashCombine(h, std::uint64_t(std::uint8_t(c)));
    h = hashCombine(h, std::uint64_t(std::uint32_t(pose.cell.i)));
    h = hashCombine(h, std::uint64_t(std::uint32_t(pose.cell.j)));
    h = hashCombine(h, std::uint64_t(std::uint32_t(pose.yawDeg)));
    h = hashCombine(h, std::uint64_t(std::uint32_t(pose.pitchDeg)));
    h = hashCombine(h, std::uint64_t(std::uint32_t(stepIndex)));
    double u1 = toUnit(h);
    double u2 = toUnit(splitmix64(h));
    u1 = std::max(u1, 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// convex CCW quad membership, boundary inclusive
bool insideConvex(const Ring& ring, Point2 p) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % n];
        const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (cross < -kGeomEps) return false;
    }
    return true;
}

}  // namespace

void DetectorConfig::validate() const {
    if (!(noiseSigma >= 0.0 && noiseSigma < 0.5))
        throw std::runtime_error("validation error: require 0 <= noiseSigma < 0.5");
}

double DetectorConfig::effectiveMaxRange(const SceneConfig& cfg) const {
    if (maxRange > 0.0) return maxRange;
    return cfg.nearFarFor(0).farDist;
}

std::vector<Cell> supercoverCells(Point2 a, Point2 b, double g) {
    std::vector<Cell> out;
    int i = int(std::floor(a.x / g)), j = int(std::floor(a.y / g));
    const int ie = int(std::floor(b.x / g)), je = int(std::floor(b.y / g));
    out.push_back({i, j});
    const double dx = b.x - a.x, dy = b.y - a.y;
    const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
    // parametric distance to the next vertical / horizontal grid line
    double tx = std::numeric_limits<double>::infinity();
    double ty = std::numeric_limits<double>::infinity();
    double dtx = 0, dty = 0;
    if (std::abs(dx) > kGeomEps) {
        const double nextX = (dx > 0 ? (i + 1) * g : i * g);
        tx = (nextX - a.x) / dx;
        dtx = g / std::abs(dx);
    }
    if (std::abs(dy) > kGeomEps) {
        const double nextY = (dy > 0 ? (j + 1) * g : j * g);
        ty = (nextY - a.y) / dy;
        dty = g / std::abs(dy);
    }
    int guard = 4 * (std::abs(ie - i) + std::abs(je - j)) + 8;
    while ((i != ie || j != je) && guard-- > 0) {
        if (std::abs(tx - ty) < 1e-12) {  // corner: include both side cells
            out.push_back({i + sx, j});
            out.push_back({i, j + sy});
            i += sx;
            j += sy;
            tx += dtx;
            ty += dty;
        } else if (tx < ty) {
            i += sx;
            tx += dtx;
        } else {
            j += sy;
            ty += dty;
        }
        out.push_back({i, j});
    }
    return out;
}

bool visible(const Pose& pose, const ObjectInstance& target, const Scene& scene,
             bool occlusionCheck) {
    const auto [world, heading] = poseToWorld(pose, scene.config);
    const NearFar& nf = scene.config.nearFarFor(pose.pitchDeg);
    ViewFrustum2D f{world, heading, nf.nearDist, nf.farDist, scene.config.fovHalfAngle};
    const Polygon trap = trapezoid(f);
    if (!insideConvex(trap.outer, target.position)) return false;
    if (occlusionCheck) {
        for (const Cell& c : supercoverCells(world, target.position, scene.config.gridStep))
            if (!scene.isReachable(c)) return false;
    }
    return true;
}

double noiselessConfidence(const Pose& pose, const ObjectInstance& target, const Scene& scene,
                           const DetectorConfig& cfg) {
    if (!visible(pose, target, scene, cfg.occlusionCheck)) return 0.0;
    if (cfg.model == DetectorModel::Binary) return 1.0;
    const auto [world, heading] = poseToWorld(pose, scene.config);
    (void)heading;
    const double d = std::hypot(target.position.x - world.x, target.position.y - world.y);
    return std::max(0.0, 1.0 - d / cfg.effectiveMaxRange(scene.config));
}

Detection detect(const Pose& pose, const ObjectInstance& target, const Scene& scene,
                 const DetectorConfig& cfg, int stepIndex) {
    cfg.validate();
    double c = noiselessConfidence(pose, target, scene, cfg);
    if (cfg.noiseSigma > 0.0)
        c += cfg.noiseSigma * hashedGaussian(cfg.seed, scene.id, pose, stepIndex);
    return {std::clamp(c, 0.0, 1.0)};
}

std::string detectorModelName(DetectorModel m) {
    return m == DetectorModel::Binary ? "binary" : "linear-falloff";
}

DetectorModel detectorModelFromName(const std::string& name) {
    if (name == "binary") return DetectorModel::Binary;
    if (name == "linear-falloff") return DetectorModel::LinearFalloff;
    throw std::runtime_error("unknown detector model: " + name);
}

}  // namespace tsnav
