#include "corn/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "corn/error.hpp"

namespace corn {

namespace {

struct HullFace {
    std::array<std::size_t, 3> v;
    Vec3 normal;
    double offset;
    bool alive = true;
};

HullFace make_face(std::span<const Vec3> p, std::size_t a, std::size_t b, std::size_t c) {
    HullFace f{{a, b, c}, (p[b] - p[a]).cross(p[c] - p[a]), 0.0};
    f.normal.normalize();
    f.offset = f.normal.dot(p[a]);
    return f;
}

}  // namespace

Hull3 convex_hull(std::span<const Vec3> p) {
    const std::size_t n = p.size();
    if (n < 4) throw Error(ErrorCode::DegenerateGeometry, "convex hull needs at least 4 points");
    Vec3 lo = p[0], hi = p[0];
    for (const auto& q : p) {
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
    const double scale = std::max((hi - lo).norm(), 1e-300);
    const double eps = 1e-9 * scale;

    // Initial tetrahedron from extreme points.
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (p[i].x() < p[i0].x()) i0 = i;
    }
    std::size_t i1 = i0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (p[i] - p[i0]).norm();
        if (d > best) best = d, i1 = i;
    }
    if (best <= eps) throw Error(ErrorCode::DegenerateGeometry, "points are coincident");
    const Vec3 dir = (p[i1] - p[i0]).normalized();
    std::size_t i2 = i0;
    best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (p[i] - p[i0]).cross(dir).norm();
        if (d > best) best = d, i2 = i;
    }
    if (best <= eps) throw Error(ErrorCode::DegenerateGeometry, "points are collinear");
    const Vec3 pn = (p[i1] - p[i0]).cross(p[i2] - p[i0]).normalized();
    std::size_t i3 = i0;
    best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(pn.dot(p[i] - p[i0]));
        if (d > best) best = d, i3 = i;
    }
    if (best <= eps) throw Error(ErrorCode::DegenerateGeometry, "points are coplanar");

    std::vector<HullFace> faces;
    if (pn.dot(p[i3] - p[i0]) > 0.0) std::swap(i1, i2);  // keep (i0,i1,i2) facing away from i3
    faces.push_back(make_face(p, i0, i1, i2));
    faces.push_back(make_face(p, i0, i3, i1));
    faces.push_back(make_face(p, i1, i3, i2));
    faces.push_back(make_face(p, i2, i3, i0));

    for (std::size_t i = 0; i < n; ++i) {
        if (i == i0 || i == i1 || i == i2 || i == i3) continue;
        std::vector<std::size_t> visible;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (faces[f].alive && faces[f].normal.dot(p[i]) - faces[f].offset > eps) visible.push_back(f);
        }
        if (visible.empty()) continue;
        std::set<std::pair<std::size_t, std::size_t>> edges;
        for (auto f : visible) {
            const auto& v = faces[f].v;
            for (int k = 0; k < 3; ++k) edges.emplace(v[std::size_t(k)], v[std::size_t((k + 1) % 3)]);
            faces[f].alive = false;
        }
        for (const auto& [a, b] : edges) {
            if (!edges.contains({b, a})) faces.push_back(make_face(p, a, b, i));
        }
    }

    Hull3 h;
    std::set<std::size_t> verts;
    for (const auto& f : faces) {
        if (!f.alive) continue;
        h.faces.push_back(f.v);
        verts.insert(f.v.begin(), f.v.end());
    }
    h.vertices.assign(verts.begin(), verts.end());
    return h;
}

std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

double polygon_margin(std::span<const Vec2> poly, const Vec2& p) {
    if (poly.size() < 3) return -std::numeric_limits<double>::infinity();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const Vec2 e = b - a;
        // Left of a counter-clockwise edge is inside.
        const double d = (e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x())) / e.norm();
        m = std::min(m, d);
    }
    return m;
}

}  // namespace corn
