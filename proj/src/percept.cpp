#include "corn/percept.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "corn/binio.hpp"
#include "corn/error.hpp"
#include "corn/kdtree.hpp"

namespace corn {

namespace {

constexpr char kPcseqMagic[4] = {'P', 'C', 'S', 'Q'};

template <class Keep>
PointCloud filter(const PointCloud& cloud, Keep&& keep) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (keep(i)) idx.push_back(i);
    }
    return cloud.subset(idx);
}

// Union-find with path halving; the root is always the smallest index.
struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

bool inside_region(const ConvexRegion& region, const Vec3& p) {
    if (region.empty()) return false;
    return std::all_of(region.begin(), region.end(),
                       [&](const Halfspace& h) { return h.normal.dot(p) - h.offset <= kHalfspaceMargin; });
}

ConvexRegion region_from_convex_mesh(const TriMesh& mesh) {
    ConvexRegion r;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Vec3 a = mesh.corner(f, 0), b = mesh.corner(f, 1), c = mesh.corner(f, 2);
        const Vec3 n = (b - a).cross(c - a).normalized();
        r.push_back({n, n.dot(a)});
    }
    return r;
}

void SegmentationConfig::validate() const {
    if (!(table_eps > 0.0 && outlier_radius > 0.0 && dbscan_eps > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "segmentation lengths must be > 0");
    }
    if (outlier_min < 1 || dbscan_min_pts < 1) throw Error(ErrorCode::InvalidConfig, "neighbor counts must be >= 1");
    if (std::abs(table.normal.norm() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidConfig, "table normal must be unit");
    if (!(workspace.min.array() <= workspace.max.array()).all()) {
        throw Error(ErrorCode::InvalidConfig, "workspace min must not exceed max");
    }
}

PointCloud crop_workspace(const PointCloud& cloud, const Aabb& box) {
    return filter(cloud, [&](std::size_t i) { return box.contains(cloud.points[i]); });
}

PointCloud remove_table(const PointCloud& cloud, const Plane& table, double eps) {
    return filter(cloud, [&](std::size_t i) { return !(std::abs(table.signed_distance(cloud.points[i])) < eps); });
}

PointCloud remove_robot(const PointCloud& cloud, std::span<const ConvexRegion> hulls) {
    return filter(cloud, [&](std::size_t i) {
        return std::none_of(hulls.begin(), hulls.end(),
                            [&](const ConvexRegion& h) { return inside_region(h, cloud.points[i]); });
    });
}

PointCloud radius_outlier_removal(const PointCloud& cloud, double r, std::size_t n_min) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidConfig, "outlier radius must be > 0");
    if (cloud.empty()) return cloud;
    const KdTree tree(cloud.points);
    return filter(cloud, [&](std::size_t i) { return tree.radius_count(cloud.points[i], r) >= n_min + 1; });
}

std::vector<int> dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts) {
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidConfig, "dbscan eps must be > 0");
    const std::size_t n = points.size();
    std::vector<int> labels(n, kNoise);
    if (n == 0) return labels;
    const KdTree tree(points);
    std::vector<std::vector<std::size_t>> nbrs(n);
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        nbrs[i] = tree.radius_search(points[i], eps);
        core[i] = nbrs[i].size() >= min_pts;
    }
    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (std::size_t j : nbrs[i]) {
            if (core[j]) sets.unite(i, j);
        }
    }
    // Owner (component root) per point; border points follow their nearest core.
    std::vector<std::ptrdiff_t> owner(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            owner[i] = std::ptrdiff_t(sets.find(i));
            continue;
        }
        double best = 0.0;
        std::ptrdiff_t pick = -1;
        for (std::size_t j : nbrs[i]) {
            if (!core[j]) continue;
            const double d2 = (points[j] - points[i]).squaredNorm();
            if (pick < 0 || d2 < best) {
                best = d2;
                pick = std::ptrdiff_t(j);
            }
        }
        if (pick >= 0) owner[i] = std::ptrdiff_t(sets.find(std::size_t(pick)));
    }
    // Number clusters by lowest member index.
    std::vector<int> id_of_root(n, kNoise);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] < 0) continue;
        int& id = id_of_root[std::size_t(owner[i])];
        if (id == kNoise) id = next++;
        labels[i] = id;
    }
    return labels;
}

PointCloud segment_object(const PointCloud& cloud, const SegmentationConfig& cfg,
                          std::span<const ConvexRegion> robot_hulls) {
    cfg.validate();
    PointCloud c = crop_workspace(cloud, cfg.workspace);
    c = remove_table(c, cfg.table, cfg.table_eps);
    c = remove_robot(c, robot_hulls);
    c = radius_outlier_removal(c, cfg.outlier_radius, cfg.outlier_min);
    const auto labels = dbscan(c.points, cfg.dbscan_eps, cfg.dbscan_min_pts);
    const int n_clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (n_clusters <= 0) return PointCloud{};
    std::vector<std::size_t> counts(std::size_t(n_clusters), 0);
    for (int l : labels) {
        if (l >= 0) ++counts[std::size_t(l)];
    }
    const int best = int(std::max_element(counts.begin(), counts.end()) - counts.begin());
    return filter(c, [&](std::size_t i) { return labels[i] == best; });
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint) {
    if (k < 2 || cloud.size() < k + 1) throw Error(ErrorCode::TooFewPoints, "normal estimation needs more than k points");
    const KdTree tree(cloud.points);
    PointCloud out = cloud;
    out.normals.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nb = tree.knn(cloud.points[i], k);
        Vec3 mean = Vec3::Zero();
        for (auto j : nb) mean += cloud.points[j];
        mean /= double(nb.size());
        Mat3 cov = Mat3::Zero();
        for (auto j : nb) {
            const Vec3 d = cloud.points[j] - mean;
            cov += d * d.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
        Vec3 n = es.eigenvectors().col(0).normalized();
        if (n.dot(viewpoint - cloud.points[i]) < 0.0) n = -n;
        out.normals[i] = n;
    }
    return out;
}

namespace {

struct Match {
    std::size_t src, tgt;
};

struct Evaluation {
    double residual = 0.0;
    std::size_t inliers = 0;
    std::vector<Match> matches;
};

Evaluation evaluate(const PointCloud& src, const KdTree& tree, const Pose& t, double max_d) {
    Evaluation ev;
    const double max_d2 = max_d * max_d;
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto [d2, j] = tree.nearest(t.apply(src.points[i]));
        if (d2 <= max_d2) {
            ev.matches.push_back({i, j});
            sum += std::sqrt(d2);
        } else {
            sum += max_d;
        }
    }
    ev.inliers = ev.matches.size();
    ev.residual = sum / double(src.size());
    return ev;
}

// Incremental transform d with d * t reducing the point-to-plane error.
bool plane_update(const PointCloud& src, const PointCloud& tgt, const Pose& t, const std::vector<Match>& m, Pose& d,
                  double& step) {
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& mm : m) {
        const Vec3 p = t.apply(src.points[mm.src]);
        const Vec3& q = tgt.points[mm.tgt];
        const Vec3& n = tgt.normals[mm.tgt];
        Eigen::Matrix<double, 6, 1> row;
        row.head<3>() = p.cross(n);
        row.tail<3>() = n;
        a += row * row.transpose();
        b += row * (q - p).dot(n);
    }
    const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::Matrix<double, 6, 1> x = ldlt.solve(b);
    if (!x.allFinite()) return false;
    d = Pose(x.tail<3>(), Rotation::from_rotation_vector(x.head<3>()));
    step = x.norm();
    return true;
}

bool point_update(const PointCloud& src, const PointCloud& tgt, const Pose& t, const std::vector<Match>& m, Pose& d,
                  double& step) {
    Vec3 mp = Vec3::Zero(), mq = Vec3::Zero();
    for (const auto& mm : m) {
        mp += t.apply(src.points[mm.src]);
        mq += tgt.points[mm.tgt];
    }
    mp /= double(m.size());
    mq /= double(m.size());
    Mat3 h = Mat3::Zero();
    for (const auto& mm : m) h += (t.apply(src.points[mm.src]) - mp) * (tgt.points[mm.tgt] - mq).transpose();
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 s = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) s(2, 2) = -1.0;
    const Mat3 r = svd.matrixV() * s * svd.matrixU().transpose();
    if (!r.allFinite()) return false;
    const Rotation rot = Rotation::from_matrix(r);
    d = Pose(mq - rot.rotate(mp), rot);
    step = rot.rotation_vector().norm() + d.translation().norm();
    return true;
}

}  // namespace

IcpResult icp(const PointCloud& src, const PointCloud& tgt, const Pose& init, const IcpConfig& cfg) {
    if (src.empty() || tgt.empty()) throw Error(ErrorCode::NoCorrespondences, "icp needs non-empty clouds");
    if (cfg.mode == IcpMode::PointToPlane && !tgt.has_normals()) {
        throw Error(ErrorCode::DegenerateInput, "point-to-plane icp needs target normals");
    }
    if (!(cfg.max_correspondence_distance > 0.0)) throw Error(ErrorCode::InvalidConfig, "correspondence distance must be > 0");
    const KdTree tree(tgt.points);
    IcpResult r;
    r.transform = init;
    Evaluation cur = evaluate(src, tree, init, cfg.max_correspondence_distance);
    if (cur.inliers == 0) throw Error(ErrorCode::NoCorrespondences, "no source point within correspondence distance");
    r.residual_history.push_back(cur.residual);
    for (int it = 0; it < cfg.max_iters; ++it) {
        Pose d;
        double step = 0.0;
        const bool ok = cfg.mode == IcpMode::PointToPlane ? plane_update(src, tgt, r.transform, cur.matches, d, step)
                                                          : point_update(src, tgt, r.transform, cur.matches, d, step);
        if (!ok) break;
        const Pose cand = d * r.transform;
        Evaluation next = evaluate(src, tree, cand, cfg.max_correspondence_distance);
        if (next.inliers == 0 || next.residual > cur.residual) break;
        const double gain = cur.residual - next.residual;
        r.transform = cand;
        cur = std::move(next);
        r.residual_history.push_back(cur.residual);
        ++r.iterations;
        if (step < cfg.tolerance || gain < cfg.tolerance) break;
    }
    r.residual = cur.residual;
    r.fitness = double(cur.inliers) / double(src.size());
    return r;
}

void TrackerConfig::validate() const {
    if (!(fitness_threshold >= 0.0 && fitness_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "fitness threshold must lie in [0, 1]");
    }
    if (!(correspondence_distance > 0.0) || n_track == 0 || normal_k < 2 || icp_iters < 0) {
        throw Error(ErrorCode::InvalidConfig, "invalid tracker configuration");
    }
}

PointCloud subsample(const PointCloud& cloud, std::size_t n, Rng& rng) {
    if (cloud.size() <= n) return cloud;
    // Partial Fisher-Yates over indices, then restore input order.
    std::vector<std::size_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + std::size_t(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return cloud.subset(idx);
}

TrackerState tracker_init(const PointCloud& c0, const Pose& t0, const TrackerConfig& cfg) {
    cfg.validate();
    TrackerState s;
    s.cfg = cfg;
    s.rng = Rng(cfg.seed);
    s.pose = t0;
    s.initial_pose = t0;
    s.initial = estimate_normals(subsample(c0, cfg.n_track, s.rng), cfg.normal_k, c0.centroid() + Vec3(0, 0, 1));
    s.previous = s.initial;
    return s;
}

TrackStep track_step(TrackerState& s, const PointCloud& frame) {
    TrackStep step;
    step.pose = s.pose;
    ++s.frame;
    if (frame.size() < s.cfg.normal_k + 1) {
        step.lost = true;
        return step;
    }
    const PointCloud ct = subsample(frame, s.cfg.n_track, s.rng);
    IcpConfig ic;
    ic.mode = s.cfg.mode;
    ic.max_iters = s.cfg.icp_iters;
    ic.max_correspondence_distance = s.cfg.correspondence_distance;
    Pose provisional;
    try {
        const IcpResult r = icp(ct, s.previous, Pose{}, ic);
        step.fitness_previous = r.fitness;
        provisional = r.transform.inverse() * s.pose;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoCorrespondences) throw;
        step.lost = true;
        return step;
    }
    step.pose = provisional;
    try {
        // Guess mapping C_t into the C0 frame from the provisional pose.
        const Pose guess = s.initial_pose * provisional.inverse();
        const IcpResult r0 = icp(ct, s.initial, guess, ic);
        step.fitness_initial = r0.fitness;
        if (r0.fitness > s.cfg.fitness_threshold) {
            step.pose = r0.transform.inverse() * s.initial_pose;
            step.reregistered = true;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoCorrespondences) throw;
    }
    s.pose = step.pose;
    s.previous = estimate_normals(ct, s.cfg.normal_k, ct.centroid() + Vec3(0, 0, 1));
    return step;
}

void write_pcseq(const std::vector<PointCloud>& frames, std::ostream& out) {
    using namespace binio;
    out.write(kPcseqMagic, 4);
    put_u32(out, kPcseqVersion);
    put_u32(out, static_cast<std::uint32_t>(frames.size()));
    for (const auto& f : frames) {
        put_u32(out, static_cast<std::uint32_t>(f.size()));
        for (const auto& p : f.points) {
            for (int k = 0; k < 3; ++k) put_f32(out, static_cast<float>(p[k]));
        }
    }
    if (!out) throw Error(ErrorCode::Io, "cloud sequence write failed");
}

void write_pcseq(const std::vector<PointCloud>& frames, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_pcseq(frames, out);
}

std::vector<PointCloud> read_pcseq(std::istream& in) {
    binio::Reader header(in, ErrorCode::BadMagic);
    char magic[4];
    header.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kPcseqMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "not a cloud sequence");
    binio::Reader rd(in, ErrorCode::TruncatedRecord);
    const std::uint32_t version = rd.u32("version");
    if (version != kPcseqVersion) throw Error(ErrorCode::UnsupportedVersion, "cloud sequence version " + std::to_string(version));
    const std::uint32_t count = rd.u32("frame count");
    std::vector<PointCloud> frames;
    for (std::uint32_t f = 0; f < count; ++f) {
        const std::uint32_t n = rd.u32("point count");
        PointCloud c;
        c.points.reserve(std::min<std::uint32_t>(n, 1u << 22));
        for (std::uint32_t i = 0; i < n; ++i) {
            Vec3 p;
            for (int k = 0; k < 3; ++k) p[k] = rd.f32("points");
            if (!is_finite(p)) throw Error(ErrorCode::NonFiniteInput, "non-finite point in cloud sequence");
            c.points.push_back(p);
        }
        frames.push_back(std::move(c));
    }
    if (!rd.at_eof()) throw Error(ErrorCode::Parse, "trailing bytes after last frame");
    return frames;
}

std::vector<PointCloud> read_pcseq(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_pcseq(in);
}

}  // namespace corn
