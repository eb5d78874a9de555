#include "corn/patches.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "corn/error.hpp"

namespace corn {

namespace {

double sq_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

void PatchConfig::validate() const {
    if (n_points == 0 || n_patches == 0 || patch_size == 0 || n_patches > n_points || patch_size > n_points) {
        throw Error(ErrorCode::InvalidConfig, "patch config requires 0 < n_patches, patch_size <= n_points");
    }
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t n) {
    const std::size_t size = cloud.size();
    if (size < n || size == 0) throw Error(ErrorCode::TooFewPoints, "farthest point sampling: cloud too small");
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    if (n == 0) return chosen;
    std::vector<double> min_d2(size, std::numeric_limits<double>::infinity());
    std::size_t current = 0;
    chosen.push_back(current);
    min_d2[current] = -1.0;  // chosen points never win again
    while (chosen.size() < n) {
        const Vec3& c = cloud.points[current];
        std::size_t best = 0;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < size; ++i) {
            min_d2[i] = std::min(min_d2[i], sq_dist(cloud.points[i], c));
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
        chosen.push_back(current);
        min_d2[current] = -1.0;
    }
    return chosen;
}

std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k) {
    if (cloud.size() < k) throw Error(ErrorCode::TooFewPoints, "knn: cloud smaller than k");
    std::vector<std::pair<double, std::size_t>> d(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) d[i] = {sq_dist(cloud.points[i], query), i};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
    return out;
}

PatchSet make_patches(const PointCloud& cloud, const PatchConfig& cfg) {
    cfg.validate();
    if (cloud.size() != cfg.n_points) {
        throw Error(ErrorCode::SizeMismatch, "make_patches: expected " + std::to_string(cfg.n_points) +
                                                 " points, got " + std::to_string(cloud.size()));
    }
    PatchSet ps;
    ps.n_patches = cfg.n_patches;
    ps.patch_size = cfg.patch_size;
    ps.center_indices = farthest_point_sample(cloud, cfg.n_patches);
    ps.centers.reserve(cfg.n_patches);
    ps.points.reserve(cfg.n_patches * cfg.patch_size);
    ps.member_indices.reserve(cfg.n_patches * cfg.patch_size);
    for (auto ci : ps.center_indices) {
        const Vec3 center = cloud.points[ci];
        ps.centers.push_back(center);
        for (auto m : knn(cloud, center, cfg.patch_size)) {
            ps.member_indices.push_back(m);
            ps.points.push_back(cloud.points[m] - center);
        }
    }
    return ps;
}

}  // namespace corn
