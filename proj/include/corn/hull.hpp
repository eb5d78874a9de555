#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "corn/geom.hpp"

namespace corn {

using Vec2 = Eigen::Vector2d;

struct Hull3 {
    std::vector<std::size_t> vertices;                // input indices, ascending
    std::vector<std::array<std::size_t, 3>> faces;    // input indices, counter-clockwise seen from outside
};

// Incremental 3-d convex hull. Points within a relative 1e-9 of a face are
// treated as coplanar and left out. Throws DegenerateGeometry when the
// points span less than three dimensions.
Hull3 convex_hull(std::span<const Vec3> points);

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points);

// For p inside a counter-clockwise convex polygon, its distance to the boundary.
// Negative outside; -inf for fewer than three vertices.
double polygon_margin(std::span<const Vec2> polygon, const Vec2& p);

}  // namespace corn
