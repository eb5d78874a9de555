#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "corn/geom.hpp"
#include "corn/rng.hpp"

namespace corn {

struct Plane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();  // unit

    double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

// Outward halfspace n.p <= offset.
struct Halfspace {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;
};
using ConvexRegion = std::vector<Halfspace>;

inline constexpr double kHalfspaceMargin = 1e-6;

bool inside_region(const ConvexRegion& region, const Vec3& p);
// Halfspaces of a convex, outward-wound triangle mesh (one per face).
ConvexRegion region_from_convex_mesh(const TriMesh& mesh);

struct SegmentationConfig {
    Aabb workspace{Vec3(-0.5, -0.5, -0.1), Vec3(0.5, 0.5, 0.5)};
    Plane table;
    double table_eps = 0.01;
    double outlier_radius = 0.02;
    std::size_t outlier_min = 96;
    double dbscan_eps = 0.01;
    std::size_t dbscan_min_pts = 4;

    void validate() const;
};

// Each filter keeps the surviving points (and normals) in input order.
PointCloud crop_workspace(const PointCloud& cloud, const Aabb& box);
PointCloud remove_table(const PointCloud& cloud, const Plane& table, double eps);
PointCloud remove_robot(const PointCloud& cloud, std::span<const ConvexRegion> hulls);
// Keeps a point iff at least n_min other points lie within r.
PointCloud radius_outlier_removal(const PointCloud& cloud, double r, std::size_t n_min);

inline constexpr int kNoise = -1;

// A point is core when its closed eps-ball (itself included) holds >= min_pts
// points. Clusters are the connected components of core points; a border point
// joins the cluster of its nearest core neighbor (ties to the lower index).
// Clusters are numbered in order of their lowest member index.
std::vector<int> dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts);

// Full pipeline: crop, table, robot, outliers, then the largest cluster
// (ties to the lower label). Empty when nothing survives.
PointCloud segment_object(const PointCloud& cloud, const SegmentationConfig& cfg,
                          std::span<const ConvexRegion> robot_hulls = {});

// Normals from the smallest eigenvector of each k-neighborhood covariance
// (the point itself included), flipped to face the viewpoint.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint = Vec3(0, 0, 1));

enum class IcpMode { PointToPlane, PointToPoint };

struct IcpConfig {
    IcpMode mode = IcpMode::PointToPlane;
    int max_iters = 50;
    double max_correspondence_distance = 0.01;
    double tolerance = 1e-10;  // stop when the update or the residual change falls below this
};

struct IcpResult {
    Pose transform;        // maps src into the tgt frame
    double fitness = 0.0;  // fraction of src with a tgt neighbor within the correspondence distance
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;  // accepted iterates, starting at init
};

// Residual: mean over src of min(nearest distance, correspondence distance).
IcpResult icp(const PointCloud& src, const PointCloud& tgt, const Pose& init, const IcpConfig& cfg = {});

struct TrackerConfig {
    std::size_t n_track = 2048;
    double fitness_threshold = 0.6;
    double correspondence_distance = 0.01;
    IcpMode mode = IcpMode::PointToPlane;
    int icp_iters = 30;
    std::size_t normal_k = 16;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrackerState {
    TrackerConfig cfg;
    Pose pose;
    Pose initial_pose;
    PointCloud initial;   // C0 with normals
    PointCloud previous;  // C_{t-1} with normals
    Rng rng{0};
    std::size_t frame = 0;
};

struct TrackStep {
    Pose pose;
    double fitness_previous = 0.0;
    double fitness_initial = 0.0;
    bool reregistered = false;
    bool lost = false;  // no usable points or correspondences; pose held
};

TrackerState tracker_init(const PointCloud& c0, const Pose& t0, const TrackerConfig& cfg = {});
TrackStep track_step(TrackerState& state, const PointCloud& frame);

// Random subset of at most n points, kept in input order.
PointCloud subsample(const PointCloud& cloud, std::size_t n, Rng& rng);

// Cloud sequence: "PCSQ", u32 version, u32 frame count, then per frame
// u32 n and n x 3 f32.
inline constexpr std::uint32_t kPcseqVersion = 1;
void write_pcseq(const std::vector<PointCloud>& frames, std::ostream& out);
void write_pcseq(const std::vector<PointCloud>& frames, const std::filesystem::path& path);
std::vector<PointCloud> read_pcseq(std::istream& in);
std::vector<PointCloud> read_pcseq(const std::filesystem::path& path);

}  // namespace corn
