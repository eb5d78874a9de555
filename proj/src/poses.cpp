#include "corn/poses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "corn/error.hpp"

namespace corn {

MassProperties com_and_volume(const TriMesh& mesh) {
    if (mesh.empty() || !mesh.watertight()) throw Error(ErrorCode::NotWatertight, "mesh must be watertight");
    double vol6 = 0.0;
    Vec3 acc = Vec3::Zero();
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Vec3 a = mesh.corner(f, 0), b = mesh.corner(f, 1), c = mesh.corner(f, 2);
        const double v = a.dot(b.cross(c));
        vol6 += v;
        acc += v * (a + b + c);
    }
    MassProperties m;
    m.volume = vol6 / 6.0;
    if (!(m.volume > 0.0)) throw Error(ErrorCode::NonPositiveVolume, "mesh volume must be positive");
    m.com = acc / (4.0 * vol6);
    return m;
}

SupportAnalysis analyze_support(const TriMesh& mesh, const Vec3& com, const Rotation& orientation) {
    SupportAnalysis s;
    double z_min = std::numeric_limits<double>::infinity();
    for (const auto& v : mesh.vertices()) z_min = std::min(z_min, orientation.rotate(v).z());
    std::vector<Vec2> contact;
    for (const auto& v : mesh.vertices()) {
        const Vec3 r = orientation.rotate(v);
        if (r.z() - z_min <= kSupportTolerance) contact.emplace_back(r.x(), r.y());
    }
    s.rest_height = -z_min;
    s.support_polygon = convex_hull_2d(std::move(contact));
    s.com_xy = orientation.rotate(com).head<2>();
    s.margin = polygon_margin(s.support_polygon, s.com_xy);
    return s;
}

namespace {

double quaternion_distance(const Rotation& a, const Rotation& b) {
    const Eigen::Vector4d x = a.quaternion().coeffs(), y = b.quaternion().coeffs();
    return std::min((x - y).norm(), (x + y).norm());
}

}  // namespace

std::vector<StablePose> stable_orientations(const TriMesh& mesh, double margin_min) {
    const MassProperties mp = com_and_volume(mesh);
    const auto& verts = mesh.vertices();
    const Hull3 hull = convex_hull(verts);
    std::vector<StablePose> out;
    for (const auto& f : hull.faces) {
        const Vec3 n = (verts[f[1]] - verts[f[0]]).cross(verts[f[2]] - verts[f[0]]).normalized();
        const Rotation r(Eigen::Quaterniond::FromTwoVectors(n, -Vec3::UnitZ()));
        const bool seen = std::any_of(out.begin(), out.end(),
                                      [&](const StablePose& s) { return quaternion_distance(s.orientation, r) < 1e-6; });
        if (seen) continue;
        SupportAnalysis a = analyze_support(mesh, mp.com, r);
        if (a.support_polygon.size() < 3 || !(a.margin >= margin_min)) continue;
        out.push_back({r, a.rest_height, std::move(a.support_polygon), a.com_xy, a.margin});
    }
    return out;
}

Pose place_stable(const StablePose& s, double x, double y, double yaw) {
    const Rotation rz = Rotation::from_axis_angle(Vec3::UnitZ(), yaw);
    return {Vec3(x, y, s.rest_height), rz * s.orientation};
}

EpisodeSpec sample_episode(const std::vector<StablePose>& stable, const Aabb& ws, Rng& rng, std::uint32_t object_id) {
    if (stable.empty()) throw Error(ErrorCode::DegenerateInput, "no stable poses to sample from");
    constexpr double pi = std::numbers::pi;
    auto draw = [&](std::size_t& cls) {
        cls = std::size_t(rng.below(stable.size()));
        const double yaw = rng.uniform(-pi, pi);
        const double x = rng.uniform(ws.min.x(), ws.max.x());
        const double y = rng.uniform(ws.min.y(), ws.max.y());
        return place_stable(stable[cls], x, y, yaw);
    };
    EpisodeSpec e;
    e.object_id = object_id;
    e.initial = draw(e.initial_class);
    for (int attempt = 0; attempt < kGoalAttempts; ++attempt) {
        e.goal = draw(e.goal_class);
        const Vec2 d = (e.goal.translation() - e.initial.translation()).head<2>();
        if (d.norm() >= kMinGoalSeparation) return e;
    }
    throw Error(ErrorCode::WorkspaceTooSmall, "no goal at least 0.1 m from the initial pose in 100 attempts");
}

}  // namespace corn
