#pragma once

#include <cstdint>
#include <vector>

#include "corn/geom.hpp"
#include "corn/hull.hpp"
#include "corn/rng.hpp"

namespace corn {

struct MassProperties {
    Vec3 com = Vec3::Zero();
    double volume = 0.0;
};

// Uniform-density COM and volume by signed tetrahedra against the origin.
// Throws NotWatertight or NonPositiveVolume.
MassProperties com_and_volume(const TriMesh& mesh);

inline constexpr double kSupportTolerance = 1e-6;

struct StablePose {
    Rotation orientation;   // object frame to table frame, resting face normal mapped to -z
    double rest_height = 0.0;  // z of the object origin when resting on z = 0
    std::vector<Vec2> support_polygon;  // counter-clockwise, table frame
    Vec2 com_xy = Vec2::Zero();
    double margin = 0.0;
};

struct SupportAnalysis {
    double rest_height = 0.0;
    std::vector<Vec2> support_polygon;
    Vec2 com_xy = Vec2::Zero();
    double margin = 0.0;
};

// Support polygon and COM margin of the mesh resting on z = 0 in the given orientation.
SupportAnalysis analyze_support(const TriMesh& mesh, const Vec3& com, const Rotation& orientation);

// One candidate per convex-hull face, kept when margin >= margin_min and
// deduplicated up to yaw. Output follows hull face order.
std::vector<StablePose> stable_orientations(const TriMesh& mesh, double margin_min = 0.002);

struct EpisodeSpec {
    Pose initial;
    Pose goal;
    std::uint32_t object_id = 0;
    std::size_t initial_class = 0;
    std::size_t goal_class = 0;
};

inline constexpr double kMinGoalSeparation = 0.1;  // m, planar
inline constexpr int kGoalAttempts = 100;

// Pose on the table: uniform class, uniform yaw, uniform xy inside the
// workspace footprint, resting height from the class.
Pose place_stable(const StablePose& s, double x, double y, double yaw);

EpisodeSpec sample_episode(const std::vector<StablePose>& stable, const Aabb& workspace, Rng& rng,
                           std::uint32_t object_id = 0);

}  // namespace corn
