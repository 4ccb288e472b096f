#include "tsnav/posegraph.hpp"
#include "tsnav/perception.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace tsnav {

namespace {

// compass yaw: 0 = +y, 90 = +x
Cell forwardCell(Cell c, int yawDeg) {
    switch (yawDeg % 360) {
        case 0: return {c.i, c.j + 1};
        case 90: return {c.i + 1, c.j};
        case 180: return {c.i, c.j - 1};
        case 270: return {c.i - 1, c.j};
        default: {
            const double rad = yawDeg * M_PI / 180.0;
            return {c.i + int(std::lround(std::sin(rad))), c.j + int(std::lround(std::cos(rad)))};
        }
    }
}

}  // namespace

PoseGraph PoseGraph::build(const Scene& scene) {
    PoseGraph g;
    g.cells_ = scene.reachableCells();
    for (std::size_t k = 0; k < g.cells_.size(); ++k) g.cellIdx_.emplace(g.cells_[k], int(k));
    g.pitchLevels_ = scene.config.pitchLevels;
    g.rotStep_ = scene.config.rotStep;
    g.nYaw_ = scene.config.yawCount();

    const int nPitch = int(g.pitchLevels_.size());
    g.succ_.assign(g.cells_.size() * g.nYaw_ * nPitch, {});
    for (int ci = 0; ci < int(g.cells_.size()); ++ci) {
        for (int yi = 0; yi < g.nYaw_; ++yi) {
            const int yaw = yi * g.rotStep_;
            for (int pi = 0; pi < nPitch; ++pi) {
                const int state = (ci * g.nYaw_ + yi) * nPitch + pi;
                auto& row = g.succ_[state];
                row.fill(-1);
                const Cell fwd = forwardCell(g.cells_[ci], yaw);
                if (auto it = g.cellIdx_.find(fwd); it != g.cellIdx_.end())
                    row[int(Action::MoveAhead)] = (it->second * g.nYaw_ + yi) * nPitch + pi;
                const int leftYi = (yi + g.nYaw_ - 1) % g.nYaw_;
                const int rightYi = (yi + 1) % g.nYaw_;
                row[int(Action::RotateLeft)] = (ci * g.nYaw_ + leftYi) * nPitch + pi;
                row[int(Action::RotateRight)] = (ci * g.nYaw_ + rightYi) * nPitch + pi;
                // pitch list is increasing; LookDown moves toward the low end
                if (pi > 0) row[int(Action::LookDown)] = (ci * g.nYaw_ + yi) * nPitch + (pi - 1);
                if (pi + 1 < nPitch)
                    row[int(Action::LookUp)] = (ci * g.nYaw_ + yi) * nPitch + (pi + 1);
            }
        }
    }
    return g;
}

int PoseGraph::stateIndex(const Pose& pose) const {
    auto it = cellIdx_.find(pose.cell);
    if (it == cellIdx_.end()) return -1;
    if (pose.yawDeg < 0 || pose.yawDeg >= 360 || pose.yawDeg % rotStep_ != 0) return -1;
    int pi = -1;
    for (std::size_t k = 0; k < pitchLevels_.size(); ++k)
        if (pitchLevels_[k] == pose.pitchDeg) pi = int(k);
    if (pi < 0) return -1;
    return (it->second * nYaw_ + pose.yawDeg / rotStep_) * int(pitchLevels_.size()) + pi;
}

Pose PoseGraph::pose(int state) const {
    const int nPitch = int(pitchLevels_.size());
    const int pi = state % nPitch;
    const int yi = (state / nPitch) % nYaw_;
    const int ci = state / (nPitch * nYaw_);
    return {cells_[ci], yi * rotStep_, pitchLevels_[pi]};
}

std::vector<int> successTerminals(const PoseGraph& graph, const ObjectInstance& target,
                                  const Scene& scene) {
    std::vector<int> out;
    for (int s = 0; s < graph.stateCount(); ++s) {
        const Pose p = graph.pose(s);
        const Point2 c = scene.cellCenter(p.cell);
        const double d = std::hypot(c.x - target.position.x, c.y - target.position.y);
        if (d <= scene.config.successRadius && visible(p, target, scene)) out.push_back(s);
    }
    return out;
}

DistanceField distanceField(const PoseGraph& graph, const ObjectInstance& target,
                            const std::vector<int>& terminals) {
    if (terminals.empty())
        throw std::runtime_error("target unreachable: empty success-terminal set for '" +
                                 target.category + "'");
    const int n = graph.stateCount();
    std::vector<std::vector<std::int32_t>> rev(n);
    for (int u = 0; u < n; ++u)
        for (int a = 0; a < kMotionActionCount; ++a)
            if (int v = graph.successor(u, Action(a)); v >= 0) rev[v].push_back(u);

    DistanceField f;
    f.targetCategory = target.category;
    f.dist.assign(n, kUnreachable);
    std::deque<int> q;
    for (int t : terminals) {
        if (f.dist[t] == 0) continue;
        f.dist[t] = 0;
        q.push_back(t);
    }
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int u : rev[v]) {
            if (f.dist[u] != kUnreachable) continue;
            f.dist[u] = f.dist[v] + 1;
            q.push_back(u);
        }
    }
    return f;
}

double metricShortestPath(const Scene& scene, Cell fromCell, const std::vector<Cell>& toCells) {
    if (toCells.empty()) throw std::runtime_error("metricShortestPath: empty target set");
    std::unordered_map<Cell, int, CellHash> hops;
    std::deque<Cell> q;
    if (!scene.isReachable(fromCell))
        throw std::runtime_error("metricShortestPath: fromCell not reachable");
    hops[fromCell] = 0;
    q.push_back(fromCell);
    std::unordered_set<Cell, CellHash> targets(toCells.begin(), toCells.end());
    if (targets.count(fromCell)) return 0.0;
    while (!q.empty()) {
        const Cell c = q.front();
        q.pop_front();
        const int h = hops[c];
        for (Cell n : {Cell{c.i + 1, c.j}, Cell{c.i - 1, c.j}, Cell{c.i, c.j + 1},
                       Cell{c.i, c.j - 1}}) {
            if (!scene.isReachable(n) || hops.count(n)) continue;
            if (targets.count(n)) return (h + 1) * scene.config.gridStep;
            hops[n] = h + 1;
            q.push_back(n);
        }
    }
    return -1.0;  // unreachable
}

}  // namespace tsnav
