#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "corn/geom.hpp"

namespace corn {

// Static 3-d tree over a point set. Results are exact and totally ordered:
// distances compare as squared norms and ties resolve to the lower index.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    std::size_t size() const { return points_.size(); }

    // k nearest, ascending by (squared distance, index).
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;
    // Same, paired with squared distances.
    std::vector<std::pair<double, std::size_t>> knn_with_distance(const Vec3& query, std::size_t k) const;
    // All points with squared distance <= radius^2, ascending by index.
    std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;
    std::size_t radius_count(const Vec3& query, double radius) const;
    // (squared distance, index) of the nearest point; tree must be non-empty.
    std::pair<double, std::size_t> nearest(const Vec3& query) const;

private:
    struct Node {
        int axis = -1;  // -1 for leaves
        double split = 0.0;
        std::size_t begin = 0, end = 0;  // leaf range into order_
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end);
    template <class Visit>
    void radius_visit(int node, const Vec3& q, double r2, Visit&& visit) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace corn
