#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "corn/geom.hpp"
#include "corn/patches.hpp"
#include "corn/rng.hpp"

namespace corn {

struct DataGenConfig {
    Aabb workspace{Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2)};
    double sigma = 0.01;  // meters
    std::size_t n_surface_points = 512;
    std::size_t displacement_samples = 1024;
    std::uint64_t seed = 0;

    void validate() const;
};

// One generated sample. The pose is kept in its stored float32 form and the
// points hold float32-representable values, so the file reproduces a record
// exactly and labels can be re-derived from what was stored.
struct ContactRecord {
    std::uint32_t object_id = 0;
    std::uint64_t seed = 0;
    std::array<float, 7> pose{0, 0, 0, 0, 0, 0, 1};  // tx, ty, tz, qx, qy, qz, qw
    std::vector<Vec3> points;          // world frame
    std::vector<std::uint8_t> labels;  // 1 when the point is inside the gripper

    Pose gripper_pose() const;
    bool operator==(const ContactRecord&) const = default;
};

struct DatasetStats {
    std::size_t n_records = 0;
    double fraction_records_any_contact = 0.0;
    double fraction_points_positive = 0.0;
    double fraction_patches_positive = 0.0;
};

// Intermediate quantities of one generation run, for inspection.
struct GenerationTrace {
    Pose object_pose;
    Pose gripper_pose_sampled;
    Vec3 delta = Vec3::Zero();
    double scale = 1.0;
    bool skipped_approach = false;
};

// Translation uniform in the workspace; rotation uniform on SO(3).
Rotation sample_rotation(Rng& rng);
std::pair<Pose, Pose> sample_poses(const Aabb& workspace, Rng& rng);

std::array<float, 7> pose_to_f32(const Pose& pose);
Pose pose_from_f32(const std::array<float, 7>& raw);
Vec3 quantize_point(const Vec3& p);

// Containment labels of `points` against `gripper` placed at `pose`.
std::vector<std::uint8_t> label_points(std::span<const Vec3> points, const TriMesh& gripper, const Pose& pose);

ContactRecord generate_record(const TriMesh& object, const TriMesh& gripper, const DataGenConfig& cfg, Rng& rng,
                              GenerationTrace* trace = nullptr);

// Record i is generated from Rng(derive_seed(cfg.seed, i)) on object i mod
// objects.size(); output order is the index order for any job count.
std::vector<ContactRecord> generate_dataset(std::span<const TriMesh> objects, const TriMesh& gripper,
                                            const DataGenConfig& cfg, std::size_t count, unsigned jobs = 1);

std::vector<std::uint8_t> patch_labels(const ContactRecord& record, const PatchSet& patches);
PointCloud record_cloud(const ContactRecord& record);

DatasetStats dataset_stats(std::span<const ContactRecord> records, const PatchConfig& cfg = {});

inline constexpr std::uint32_t kDatasetVersion = 1;
void write_dataset(std::span<const ContactRecord> records, const std::filesystem::path& path);
void write_dataset(std::span<const ContactRecord> records, std::ostream& out);
std::vector<ContactRecord> read_dataset(const std::filesystem::path& path);
std::vector<ContactRecord> read_dataset(std::istream& in);

}  // namespace corn
