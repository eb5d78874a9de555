#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>

#include "corn/contactgen.hpp"
#include "corn/geom.hpp"
#include "corn/rng.hpp"

namespace testutil {

using corn::Vec3;

inline corn::Pose random_pose(corn::Rng& rng, double extent = 1.0) {
    const Vec3 t(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent));
    return {t, corn::sample_rotation(rng)};
}

inline Vec3 random_vec(corn::Rng& rng, double extent = 1.0) {
    return {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
}

// Fresh per-test scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("corn_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Closest point on segment [a, b].
inline Vec3 segment_closest(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return a + t * ab;
}

// Point-to-triangle distance by plane projection plus edge fallback.
inline double triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = (b - a).cross(c - a).normalized();
    const Vec3 q = p - n * n.dot(p - a);
    const bool inside = n.dot((b - a).cross(q - a)) >= 0 && n.dot((c - b).cross(q - b)) >= 0 &&
                        n.dot((a - c).cross(q - c)) >= 0;
    if (inside) return (p - q).norm();
    return std::min({(p - segment_closest(p, a, b)).norm(), (p - segment_closest(p, b, c)).norm(),
                     (p - segment_closest(p, c, a)).norm()});
}

inline double mesh_distance(const Vec3& p, const corn::TriMesh& m) {
    double best = INFINITY;
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        best = std::min(best, triangle_distance(p, m.corner(f, 0), m.corner(f, 1), m.corner(f, 2)));
    }
    return best;
}

}  // namespace testutil
