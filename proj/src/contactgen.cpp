#include "corn/contactgen.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include "corn/binio.hpp"
#include "corn/error.hpp"

namespace corn {

namespace {

constexpr char kDatasetMagic[4] = {'C', 'O', 'R', 'N'};
constexpr double kMinDisplacement = 1e-6;

}  // namespace

void DataGenConfig::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidConfig, "sigma must be >= 0");
    if (n_surface_points == 0 || n_surface_points > UINT16_MAX) {
        throw Error(ErrorCode::InvalidConfig, "n_surface_points must be in [1, 65535]");
    }
    if (displacement_samples == 0) throw Error(ErrorCode::InvalidConfig, "displacement_samples must be >= 1");
}

Pose ContactRecord::gripper_pose() const { return pose_from_f32(pose); }

Rotation sample_rotation(Rng& rng) {
    // Subgroup algorithm (Shoemake).
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
    return Rotation(a * std::sin(t2), a * std::cos(t2), b * std::sin(t3), b * std::cos(t3));
}

std::pair<Pose, Pose> sample_poses(const Aabb& workspace, Rng& rng) {
    auto one = [&]() {
        Vec3 t;
        for (int k = 0; k < 3; ++k) t[k] = rng.uniform(workspace.min[k], workspace.max[k]);
        return Pose(t, sample_rotation(rng));
    };
    Pose object = one();
    Pose gripper = one();
    return {object, gripper};
}

std::array<float, 7> pose_to_f32(const Pose& pose) {
    std::array<float, 7> raw;
    const auto a = pose.to_array();
    for (std::size_t i = 0; i < 7; ++i) raw[i] = static_cast<float>(a[i]);
    return raw;
}

Pose pose_from_f32(const std::array<float, 7>& raw) {
    std::array<double, 7> a;
    for (std::size_t i = 0; i < 7; ++i) a[i] = raw[i];
    return Pose::from_array(a);
}

Vec3 quantize_point(const Vec3& p) {
    // GCC 11 at -O3 drops the float narrowing for SLP-vectorized lanes, so each
    // component goes through a volatile float.
    Vec3 q;
    for (int k = 0; k < 3; ++k) {
        volatile float f = static_cast<float>(p[k]);
        q[k] = f;
    }
    return q;
}

std::vector<std::uint8_t> label_points(std::span<const Vec3> points, const TriMesh& gripper, const Pose& pose) {
    const TriMesh placed = gripper.transformed(pose);
    std::vector<std::uint8_t> labels(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) labels[i] = point_in_mesh(points[i], placed) ? 1 : 0;
    return labels;
}

ContactRecord generate_record(const TriMesh& object, const TriMesh& gripper, const DataGenConfig& cfg, Rng& rng,
                              GenerationTrace* trace) {
    cfg.validate();
    if (object.empty()) throw Error(ErrorCode::DegenerateGeometry, "object mesh has no faces");
    if (!object.watertight()) throw Error(ErrorCode::NotWatertight, "object mesh is not watertight");
    if (!gripper.watertight()) throw Error(ErrorCode::NotWatertight, "gripper mesh is not watertight");

    const auto [object_pose, gripper_pose] = sample_poses(cfg.workspace, rng);
    const TriMesh object_world = object.transformed(object_pose);
    const TriMesh gripper_world = gripper.transformed(gripper_pose);

    const Vec3 delta = nearest_displacement(object_world, gripper_world, cfg.displacement_samples, rng);
    const double gap = delta.norm();
    double scale = 1.0;
    Pose moved = gripper_pose;
    const bool skip = gap < kMinDisplacement;
    if (!skip) {
        scale = rng.normal(1.0, cfg.sigma / gap);
        moved = Pose(gripper_pose.translation() - scale * delta, gripper_pose.rotation());
    }

    ContactRecord rec;
    rec.pose = pose_to_f32(moved);
    const PointCloud surface = sample_surface_points(object_world, cfg.n_surface_points, rng);
    rec.points.reserve(surface.size());
    for (const auto& p : surface.points) rec.points.push_back(quantize_point(p));
    rec.labels = label_points(rec.points, gripper, rec.gripper_pose());

    if (trace) {
        trace->object_pose = object_pose;
        trace->gripper_pose_sampled = gripper_pose;
        trace->delta = delta;
        trace->scale = scale;
        trace->skipped_approach = skip;
    }
    return rec;
}

std::vector<ContactRecord> generate_dataset(std::span<const TriMesh> objects, const TriMesh& gripper,
                                            const DataGenConfig& cfg, std::size_t count, unsigned jobs) {
    cfg.validate();
    if (objects.empty()) throw Error(ErrorCode::DegenerateGeometry, "no object meshes");
    std::vector<ContactRecord> records(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        try {
            for (std::size_t i = next++; i < count && !failed; i = next++) {
                const std::uint64_t seed = derive_seed(cfg.seed, i);
                Rng rng(seed);
                const auto object_id = static_cast<std::uint32_t>(i % objects.size());
                ContactRecord rec = generate_record(objects[object_id], gripper, cfg, rng);
                rec.object_id = object_id;
                rec.seed = seed;
                records[i] = std::move(rec);
            }
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    };
    jobs = std::max(1u, jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

PointCloud record_cloud(const ContactRecord& record) { return PointCloud(record.points); }

std::vector<std::uint8_t> patch_labels(const ContactRecord& record, const PatchSet& patches) {
    if (record.labels.size() != record.points.size()) {
        throw Error(ErrorCode::SizeMismatch, "record labels and points differ in length");
    }
    std::vector<std::uint8_t> out(patches.n_patches, 0);
    for (std::size_t p = 0; p < patches.n_patches; ++p) {
        for (std::size_t j = 0; j < patches.patch_size; ++j) {
            const std::size_t m = patches.member(p, j);
            if (m >= record.labels.size()) throw Error(ErrorCode::SizeMismatch, "patch member outside record");
            if (record.labels[m]) {
                out[p] = 1;
                break;
            }
        }
    }
    return out;
}

DatasetStats dataset_stats(std::span<const ContactRecord> records, const PatchConfig& cfg) {
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "dataset_stats on an empty dataset");
    std::size_t any = 0, pos_points = 0, total_points = 0, pos_patches = 0, total_patches = 0;
    for (const auto& r : records) {
        std::size_t n_pos = 0;
        for (auto l : r.labels) n_pos += l;
        any += n_pos > 0;
        pos_points += n_pos;
        total_points += r.labels.size();
        PatchConfig pc = cfg;
        pc.n_points = r.points.size();
        const auto labels = patch_labels(r, make_patches(record_cloud(r), pc));
        for (auto l : labels) pos_patches += l;
        total_patches += labels.size();
    }
    DatasetStats s;
    s.n_records = records.size();
    s.fraction_records_any_contact = static_cast<double>(any) / static_cast<double>(records.size());
    s.fraction_points_positive =
        total_points ? static_cast<double>(pos_points) / static_cast<double>(total_points) : 0.0;
    s.fraction_patches_positive =
        total_patches ? static_cast<double>(pos_patches) / static_cast<double>(total_patches) : 0.0;
    return s;
}

// ------------------------------------------------------------------- file io

void write_dataset(std::span<const ContactRecord> records, std::ostream& out) {
    using namespace binio;
    out.write(kDatasetMagic, 4);
    put_u32(out, kDatasetVersion);
    put_u64(out, records.size());
    for (const auto& r : records) {
        if (r.points.size() != r.labels.size() || r.points.size() > UINT16_MAX) {
            throw Error(ErrorCode::SizeMismatch, "record points/labels inconsistent");
        }
        put_u32(out, r.object_id);
        put_u64(out, r.seed);
        for (float v : r.pose) put_f32(out, v);
        put_u16(out, static_cast<std::uint16_t>(r.points.size()));
        for (const auto& p : r.points) {
            for (int k = 0; k < 3; ++k) put_f32(out, static_cast<float>(p[k]));
        }
        for (auto l : r.labels) put_u8(out, l ? 1 : 0);
    }
    if (!out) throw Error(ErrorCode::Io, "dataset write failed");
}

void write_dataset(std::span<const ContactRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_dataset(records, out);
}

std::vector<ContactRecord> read_dataset(std::istream& in) {
    binio::Reader header(in, ErrorCode::BadMagic);
    char magic[4];
    header.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "not a CORN dataset");
    binio::Reader rd(in, ErrorCode::TruncatedRecord);
    const std::uint32_t version = rd.u32("version");
    if (version != kDatasetVersion) {
        throw Error(ErrorCode::UnsupportedVersion, "dataset version " + std::to_string(version));
    }
    const std::uint64_t count = rd.u64("record count");
    std::vector<ContactRecord> records;
    records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t i = 0; i < count; ++i) {
        ContactRecord r;
        r.object_id = rd.u32("object id");
        r.seed = rd.u64("seed");
        for (auto& v : r.pose) v = rd.f32("pose");
        const std::uint16_t n = rd.u16("point count");
        r.points.resize(n);
        for (auto& p : r.points) {
            for (int k = 0; k < 3; ++k) p[k] = rd.f32("points");
        }
        r.labels.resize(n);
        for (auto& l : r.labels) {
            l = rd.u8("labels");
            if (l > 1) throw Error(ErrorCode::Parse, "label byte is not 0/1");
        }
        records.push_back(std::move(r));
    }
    if (!rd.at_eof()) throw Error(ErrorCode::Parse, "trailing bytes after last record");
    return records;
}

std::vector<ContactRecord> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_dataset(in);
}

}  // namespace corn
