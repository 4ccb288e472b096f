#pragma once

#include <stdexcept>
#include <vector>

namespace tsnav {

constexpr double kGeomEps = 1e-9;  // vertex snap tolerance, meters
constexpr double kAreaEps = 1e-6;  // area comparison tolerance, m^2

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Closed vertex loop; the last vertex is NOT repeated.
using Ring = std::vector<Point2>;

/// Outer ring counter-clockwise, holes clockwise.
struct Polygon {
    Ring outer;
    std::vector<Ring> holes;

    double area() const;
    bool contains(Point2 p) const;  // boundary counts as inside

    static Polygon rect(double x0, double y0, double x1, double y1);
};

/// Union of pairwise interior-disjoint polygons. Empty region is valid.
struct Region {
    std::vector<Polygon> polygons;

    Region() = default;
    explicit Region(Polygon p) { polygons.push_back(std::move(p)); }

    double area() const;
    bool empty() const { return polygons.empty(); }
    bool contains(Point2 p) const;
};

/// Bird's-eye view wedge simplified to an isosceles trapezoid.
/// Heading is compass-style: 0 deg = +y, 90 deg = +x.
struct ViewFrustum2D {
    Point2 apex;
    double headingDeg = 0.0;
    double nearDist = 1.0;
    double farDist = 4.0;
    double halfAngleDeg = 45.0;

    void validate() const {
        if (!(nearDist > 0.0 && nearDist < farDist))
            throw std::invalid_argument("frustum: require 0 < near < far");
        if (!(halfAngleDeg > 0.0 && halfAngleDeg < 90.0))
            throw std::invalid_argument("frustum: require 0 < halfAngle < 90");
    }
};

/// 4-vertex trapezoid between the near and far bases, vertices CCW.
Polygon trapezoid(const ViewFrustum2D& f);

Region unionOf(const Region& a, const Region& b);
Region intersectOf(const Region& a, const Region& b);

inline Region unionOf(const Region& a, const Polygon& p) { return unionOf(a, Region(p)); }
inline Region intersectOf(const Region& a, const Polygon& p) { return intersectOf(a, Region(p)); }

}  // namespace tsnav
