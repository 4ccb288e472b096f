#include "tsnav/geometry.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include <cmath>

namespace bg = boost::geometry;

namespace tsnav {
namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, /*ClockWise=*/false, /*Closed=*/true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

constexpr double kDegenerateArea = 1e-12;

double snap(double v) { return std::round(v / kGeomEps) * kGeomEps; }

void appendRing(BPolygon::ring_type& out, const Ring& ring) {
    out.reserve(ring.size() + 1);
    for (const Point2& p : ring) out.emplace_back(snap(p.x), snap(p.y));
    if (!ring.empty()) out.emplace_back(snap(ring.front().x), snap(ring.front().y));
}

BMulti toBoost(const Region& r) {
    BMulti m;
    for (const Polygon& poly : r.polygons) {
        BPolygon bp;
        appendRing(bp.outer(), poly.outer);
        for (const Ring& h : poly.holes) {
            bp.inners().emplace_back();
            appendRing(bp.inners().back(), h);
        }
        bg::correct(bp);
        if (std::abs(bg::area(bp)) > kDegenerateArea) m.push_back(std::move(bp));
    }
    return m;
}

Ring fromBoostRing(const BPolygon::ring_type& ring) {
    Ring out;
    if (ring.size() < 2) return out;
    out.reserve(ring.size() - 1);
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)  // drop repeated closing vertex
        out.push_back({bg::get<0>(ring[i]), bg::get<1>(ring[i])});
    // dedupe coincident neighbors introduced by snapping
    Ring clean;
    for (const Point2& p : out) {
        if (clean.empty() || std::abs(clean.back().x - p.x) > kGeomEps / 2 ||
            std::abs(clean.back().y - p.y) > kGeomEps / 2)
            clean.push_back(p);
    }
    return clean;
}

Region fromBoost(const BMulti& m) {
    Region r;
    for (const BPolygon& bp : m) {
        if (std::abs(bg::area(bp)) <= kDegenerateArea) continue;
        Polygon poly;
        poly.outer = fromBoostRing(bp.outer());
        if (poly.outer.size() < 3) continue;
        for (const auto& inner : bp.inners()) {
            Ring h = fromBoostRing(inner);
            if (h.size() >= 3) poly.holes.push_back(std::move(h));
        }
        r.polygons.push_back(std::move(poly));
    }
    return r;
}

double shoelace(const Ring& ring) {
    double s = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

}  // namespace

double Polygon::area() const {
    double s = shoelace(outer);
    for (const Ring& h : holes) s += shoelace(h);  // holes are CW, negative
    return s;
}

bool Polygon::contains(Point2 p) const {
    Region r;
    r.polygons.push_back(*this);
    BMulti m = toBoost(r);
    return bg::covered_by(BPoint(p.x, p.y), m);
}

Polygon Polygon::rect(double x0, double y0, double x1, double y1) {
    Polygon p;
    p.outer = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return p;
}

double Region::area() const {
    double s = 0.0;
    for (const Polygon& p : polygons) s += p.area();
    return s;
}

bool Region::contains(Point2 p) const {
    BMulti m = toBoost(*this);
    return bg::covered_by(BPoint(p.x, p.y), m);
}

Polygon trapezoid(const ViewFrustum2D& f) {
    f.validate();
    const double rad = f.headingDeg * M_PI / 180.0;
    const double dx = std::sin(rad), dy = std::cos(rad);    // heading
    const double lx = -dy, ly = dx;                         // left of heading
    const double t = std::tan(f.halfAngleDeg * M_PI / 180.0);
    const double wn = f.nearDist * t, wf = f.farDist * t;
    const Point2 a = f.apex;
    Polygon p;
    p.outer = {
        {a.x + f.nearDist * dx + wn * lx, a.y + f.nearDist * dy + wn * ly},
        {a.x + f.nearDist * dx - wn * lx, a.y + f.nearDist * dy - wn * ly},
        {a.x + f.farDist * dx - wf * lx, a.y + f.farDist * dy - wf * ly},
        {a.x + f.farDist * dx + wf * lx, a.y + f.farDist * dy + wf * ly},
    };
    return p;
}

Region unionOf(const Region& a, const Region& b) {
    BMulti out;
    bg::union_(toBoost(a), toBoost(b), out);
    return fromBoost(out);
}

Region intersectOf(const Region& a, const Region& b) {
    BMulti out;
    bg::intersection(toBoost(a), toBoost(b), out);
    return fromBoost(out);
}

}  // namespace tsnav
