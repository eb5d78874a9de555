#pragma once

#include <cstddef>
#include <vector>

#include "corn/geom.hpp"

namespace corn {

struct PatchConfig {
    std::size_t n_points = 512;
    std::size_t n_patches = 16;
    std::size_t patch_size = 32;

    // Throws InvalidConfig when the counts are inconsistent.
    void validate() const;
};

// Patches are kNN groups around FPS-selected centers, expressed relative to
// their center and ordered by distance from it.
struct PatchSet {
    std::size_t n_patches = 0;
    std::size_t patch_size = 0;
    std::vector<Vec3> centers;                // n_patches
    std::vector<Vec3> points;                 // n_patches * patch_size, row-major
    std::vector<std::size_t> member_indices;  // n_patches * patch_size
    std::vector<std::size_t> center_indices;  // n_patches

    const Vec3& point(std::size_t patch, std::size_t j) const { return points[patch * patch_size + j]; }
    std::size_t member(std::size_t patch, std::size_t j) const { return member_indices[patch * patch_size + j]; }
};

// Greedy farthest-point sampling seeded at index 0; ties go to the lowest index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t n);

// Exhaustive k nearest neighbours, ascending by (distance, index).
std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k);

PatchSet make_patches(const PointCloud& cloud, const PatchConfig& cfg = {});

}  // namespace corn
