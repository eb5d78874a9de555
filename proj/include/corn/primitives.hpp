#pragma once

#include <vector>

#include <Eigen/Core>

#include "corn/geom.hpp"

namespace corn {

// Closed, outward-oriented meshes centered at the origin.
TriMesh make_box(const Vec3& half_extents);
TriMesh make_icosphere(double radius, int subdivisions);
TriMesh make_cylinder(double radius, double half_height, int segments);
TriMesh make_cone(double radius, double height, int segments);

// Simple counter-clockwise polygon in the xy plane extruded along z over
// [z_min, z_max]. Caps are ear-clipped.
TriMesh make_prism(const std::vector<Eigen::Vector2d>& polygon, double z_min, double z_max);

// Single rigid mesh of a parallel-jaw hand with its fingers closed: a palm
// slab above a finger block, gripper frame at the fingertip center with +z
// pointing from the tip toward the palm.
TriMesh make_closed_gripper();

// Five primitives at tabletop-object scale used for dataset generation.
std::vector<TriMesh> make_primitive_set();

}  // namespace corn
