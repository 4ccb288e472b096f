#include "testkit.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

namespace tsnav::testkit {

McEstimate mcArea(const std::function<bool(Point2)>& inside, const Rect& bbox,
                  std::size_t samples, std::uint64_t seed) {
    if (samples < 100000) throw std::invalid_argument("mcArea: samples >= 1e5 required");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(bbox.x0, bbox.x1), uy(bbox.y0, bbox.y1);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < samples; ++k)
        if (inside({ux(rng), uy(rng)})) ++hits;
    const double boxArea = (bbox.x1 - bbox.x0) * (bbox.y1 - bbox.y0);
    const double p = double(hits) / double(samples);
    McEstimate e;
    e.area = p * boxArea;
    e.stderr_ = boxArea * std::sqrt(p * (1.0 - p) / double(samples));
    return e;
}

bool pointInRing(const Ring& ring, Point2 p) {
    bool in = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = ring[i];
        const Point2& b = ring[j];
        if ((a.y > p.y) != (b.y > p.y) &&
            p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
            in = !in;
    }
    return in;
}

bool pointInPolygon(const Polygon& poly, Point2 p) {
    if (!pointInRing(poly.outer, p)) return false;
    for (const Ring& h : poly.holes)
        if (pointInRing(h, p)) return false;
    return true;
}

bool pointInRegion(const Region& region, Point2 p) {
    for (const Polygon& poly : region.polygons)
        if (pointInPolygon(poly, p)) return true;
    return false;
}

McEstimate mcAreaRegion(const Region& region, std::size_t samples, std::uint64_t seed) {
    if (region.empty()) return {};
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const Polygon& poly : region.polygons)
        for (const Point2& p : poly.outer) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
    return mcArea([&](Point2 p) { return pointInRegion(region, p); }, {x0, y0, x1, y1}, samples,
                  seed);
}

std::int32_t bruteDistance(const PoseGraph& graph, const std::vector<int>& terminals, int state) {
    std::vector<char> isTerminal(graph.stateCount(), 0);
    for (int t : terminals) isTerminal[t] = 1;
    if (isTerminal[state]) return 0;
    std::vector<std::int32_t> dist(graph.stateCount(), -1);
    dist[state] = 0;
    std::deque<int> q{state};
    while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int a = 0; a < kMotionActionCount; ++a) {
            const int v = graph.successor(u, Action(a));
            if (v < 0 || dist[v] >= 0) continue;
            if (isTerminal[v]) return dist[u] + 1;
            dist[v] = dist[u] + 1;
            q.push_back(v);
        }
    }
    return kUnreachable;
}

std::vector<std::vector<Action>> enumerateOptimal(const PoseGraph& graph,
                                                  const std::vector<int>& terminals, int start,
                                                  int maxStates, std::size_t maxSequences) {
    if (graph.stateCount() > maxStates)
        throw std::runtime_error("enumerateOptimal: scene too large");
    std::vector<std::int32_t> toGoal(graph.stateCount());
    for (int s = 0; s < graph.stateCount(); ++s) toGoal[s] = bruteDistance(graph, terminals, s);
    if (toGoal[start] == kUnreachable)
        throw std::runtime_error("enumerateOptimal: UNREACHABLE");

    std::vector<std::vector<Action>> out;
    std::vector<Action> current;
    std::function<void(int)> rec = [&](int u) {
        if (out.size() >= maxSequences) return;
        if (toGoal[u] == 0) {
            out.push_back(current);
            return;
        }
        for (int a = 0; a < kMotionActionCount; ++a) {
            const int v = graph.successor(u, Action(a));
            if (v < 0 || toGoal[v] != toGoal[u] - 1) continue;
            current.push_back(Action(a));
            rec(v);
            current.pop_back();
        }
    };
    rec(start);
    return out;
}

Scene makeCorridorScene(int cells, double gridStep) {
    Scene s;
    s.id = "corridor-" + std::to_string(cells);
    s.config.gridStep = gridStep;
    s.roomBounds = Polygon::rect(0, 0, cells * gridStep, gridStep);
    const Point2 lastCenter{(cells - 0.5) * gridStep, 0.5 * gridStep};
    s.objects.push_back({"Target", lastCenter});
    s.finalize();
    return s;
}

Scene makeOpenRoomScene(double width, double height, Point2 target, double gridStep) {
    Scene s;
    s.id = "room";
    s.config.gridStep = gridStep;
    s.roomBounds = Polygon::rect(0, 0, width, height);
    s.objects.push_back({"Target", target});
    s.finalize();
    return s;
}

}  // namespace tsnav::testkit
