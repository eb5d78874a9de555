#include "corn/primitives.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "corn/error.hpp"

namespace corn {

TriMesh make_box(const Vec3& h) {
    std::vector<Vec3> v;
    for (int i = 0; i < 8; ++i) {
        v.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    }
    std::vector<Face> f = {
        {0, 2, 1}, {1, 2, 3},  // -z
        {4, 5, 6}, {5, 7, 6},  // +z
        {0, 1, 4}, {1, 5, 4},  // -y
        {2, 6, 3}, {3, 6, 7},  // +y
        {0, 4, 2}, {2, 4, 6},  // -x
        {1, 3, 5}, {3, 7, 5},  // +x
    };
    return TriMesh(std::move(v), std::move(f));
}

TriMesh make_icosphere(double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& p : v) p.normalize();
    std::vector<Face> f = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
    };
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
        auto mid = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        next.reserve(f.size() * 4);
        for (const auto& tri : f) {
            const auto ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (auto& p : v) p *= radius;
    return TriMesh(std::move(v), std::move(f));
}

TriMesh make_cylinder(double radius, double half_height, int segments) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    const auto n = static_cast<std::uint32_t>(segments);
    for (std::uint32_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * i / n;
        v.emplace_back(radius * std::cos(a), radius * std::sin(a), -half_height);
        v.emplace_back(radius * std::cos(a), radius * std::sin(a), half_height);
    }
    const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
    v.emplace_back(0, 0, -half_height);
    v.emplace_back(0, 0, half_height);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = (i + 1) % n;
        const std::uint32_t b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        f.push_back({b0, b1, t1});
        f.push_back({b0, t1, t0});
        f.push_back({bottom, b1, b0});
        f.push_back({top, t0, t1});
    }
    return TriMesh(std::move(v), std::move(f));
}

TriMesh make_cone(double radius, double height, int segments) {
    std::vector<Vec3> v;
    std::vector<Face> f;
    const auto n = static_cast<std::uint32_t>(segments);
    // Base at z = -height/4 puts the centroid at the origin.
    const double z0 = -0.25 * height;
    for (std::uint32_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * i / n;
        v.emplace_back(radius * std::cos(a), radius * std::sin(a), z0);
    }
    const std::uint32_t apex = n, base = n + 1;
    v.emplace_back(0, 0, z0 + height);
    v.emplace_back(0, 0, z0);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = (i + 1) % n;
        f.push_back({i, j, apex});
        f.push_back({base, j, i});
    }
    return TriMesh(std::move(v), std::move(f));
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

bool in_triangle(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                 const Eigen::Vector2d& c) {
    return cross2(b - a, p - a) >= 0.0 && cross2(c - b, p - b) >= 0.0 && cross2(a - c, p - c) >= 0.0;
}

std::vector<std::array<std::uint32_t, 3>> ear_clip(const std::vector<Eigen::Vector2d>& poly) {
    std::vector<std::uint32_t> remaining(poly.size());
    for (std::uint32_t i = 0; i < poly.size(); ++i) remaining[i] = i;
    std::vector<std::array<std::uint32_t, 3>> tris;
    while (remaining.size() > 3) {
        bool clipped = false;
        for (std::size_t k = 0; k < remaining.size(); ++k) {
            const auto ia = remaining[(k + remaining.size() - 1) % remaining.size()];
            const auto ib = remaining[k];
            const auto ic = remaining[(k + 1) % remaining.size()];
            if (cross2(poly[ib] - poly[ia], poly[ic] - poly[ib]) <= 0.0) continue;
            bool blocked = false;
            for (auto other : remaining) {
                if (other == ia || other == ib || other == ic) continue;
                if (in_triangle(poly[other], poly[ia], poly[ib], poly[ic])) {
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
            tris.push_back({ia, ib, ic});
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
            clipped = true;
            break;
        }
        if (!clipped) throw Error(ErrorCode::DegenerateInput, "polygon is not simple and counter-clockwise");
    }
    tris.push_back({remaining[0], remaining[1], remaining[2]});
    return tris;
}

}  // namespace

TriMesh make_prism(const std::vector<Eigen::Vector2d>& polygon, double z_min, double z_max) {
    if (polygon.size() < 3 || !(z_max > z_min)) throw Error(ErrorCode::DegenerateInput, "bad prism");
    const auto n = static_cast<std::uint32_t>(polygon.size());
    std::vector<Vec3> v;
    for (const auto& p : polygon) v.emplace_back(p.x(), p.y(), z_min);
    for (const auto& p : polygon) v.emplace_back(p.x(), p.y(), z_max);
    std::vector<Face> f;
    for (const auto& t : ear_clip(polygon)) {
        f.push_back({t[0], t[2], t[1]});              // bottom faces -z
        f.push_back({t[0] + n, t[1] + n, t[2] + n});  // top faces +z
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = (i + 1) % n;
        f.push_back({i, j, j + n});
        f.push_back({i, j + n, i + n});
    }
    return TriMesh(std::move(v), std::move(f));
}

TriMesh make_closed_gripper() {
    // Cross-section in the gripper xz plane (x across the jaws, z along the
    // approach axis), extruded along y. Prism axis is mapped onto gripper y.
    const double finger_half_width = 0.02, finger_length = 0.06;
    const double palm_half_width = 0.1, palm_height = 0.06, half_depth = 0.03;
    const std::vector<Eigen::Vector2d> outline = {
        {-finger_half_width, 0.0},
        {finger_half_width, 0.0},
        {finger_half_width, finger_length},
        {palm_half_width, finger_length},
        {palm_half_width, finger_length + palm_height},
        {-palm_half_width, finger_length + palm_height},
        {-palm_half_width, finger_length},
        {-finger_half_width, finger_length},
    };
    const TriMesh flat = make_prism(outline, -half_depth, half_depth);
    // Prism (x, y, z) -> gripper (x, -z, y) keeps the orientation proper.
    Mat3 m;
    m << 1, 0, 0,
         0, 0, -1,
         0, 1, 0;
    return flat.transformed(Pose(Vec3::Zero(), Rotation::from_matrix(m)));
}

std::vector<TriMesh> make_primitive_set() {
    std::vector<TriMesh> set;
    set.push_back(make_box(Vec3(0.05, 0.05, 0.05)));
    set.push_back(make_cylinder(0.04, 0.08, 24));
    set.push_back(make_icosphere(0.06, 2));
    set.push_back(make_cone(0.06, 0.14, 24));
    set.push_back(make_box(Vec3(0.1, 0.06, 0.02)));
    return set;
}

}  // namespace corn
