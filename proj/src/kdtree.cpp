#include "corn/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace corn {

namespace {

constexpr std::size_t kLeafSize = 12;

double sq_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!points_.empty()) root_ = build(0, points_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin > kLeafSize) {
        Vec3 lo = points_[order_[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        if (hi[axis] > lo[axis]) {
            const std::size_t mid = begin + (end - begin) / 2;
            std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                             order_.begin() + static_cast<std::ptrdiff_t>(mid),
                             order_.begin() + static_cast<std::ptrdiff_t>(end),
                             [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
            node.axis = axis;
            node.split = points_[order_[mid]][axis];
            const int self = static_cast<int>(nodes_.size());
            nodes_.push_back(node);
            const int l = build(begin, mid);
            const int r = build(mid, end);
            nodes_[self].left = l;
            nodes_[self].right = r;
            return self;
        }
    }
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size() - 1);
}

// Left subtree holds coordinates <= split, right subtree >= split.
std::vector<std::pair<double, std::size_t>> KdTree::knn_with_distance(const Vec3& q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> out;
    if (k == 0 || root_ < 0) return out;
    std::priority_queue<std::pair<double, std::size_t>> heap;  // max-heap on (d2, index)
    auto worst = [&]() {
        return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().first;
    };
    auto visit = [&](auto&& self, int ni) -> void {
        const Node& n = nodes_[ni];
        if (n.axis < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const std::size_t idx = order_[i];
                const std::pair<double, std::size_t> cand{sq_dist(points_[idx], q), idx};
                if (heap.size() < k) {
                    heap.push(cand);
                } else if (cand < heap.top()) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        const double diff = q[n.axis] - n.split;
        const int near = diff <= 0.0 ? n.left : n.right;
        const int far = diff <= 0.0 ? n.right : n.left;
        self(self, near);
        if (diff * diff <= worst()) self(self, far);
    };
    visit(visit, root_);
    out.resize(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = heap.top();
        heap.pop();
    }
    return out;
}

std::vector<std::size_t> KdTree::knn(const Vec3& q, std::size_t k) const {
    std::vector<std::size_t> idx;
    for (const auto& [d2, i] : knn_with_distance(q, k)) idx.push_back(i);
    return idx;
}

template <class Visit>
void KdTree::radius_visit(int ni, const Vec3& q, double r2, Visit&& visit) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
        for (std::size_t i = n.begin; i < n.end; ++i) {
            const std::size_t idx = order_[i];
            if (sq_dist(points_[idx], q) <= r2) visit(idx);
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    if (diff <= 0.0 || diff * diff <= r2) radius_visit(n.left, q, r2, visit);
    if (diff >= 0.0 || diff * diff <= r2) radius_visit(n.right, q, r2, visit);
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    if (root_ < 0) return out;
    radius_visit(root_, q, radius * radius, [&](std::size_t i) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t KdTree::radius_count(const Vec3& q, double radius) const {
    std::size_t count = 0;
    if (root_ < 0) return 0;
    radius_visit(root_, q, radius * radius, [&](std::size_t) { ++count; });
    return count;
}

std::pair<double, std::size_t> KdTree::nearest(const Vec3& q) const {
    return knn_with_distance(q, 1).front();
}

}  // namespace corn
