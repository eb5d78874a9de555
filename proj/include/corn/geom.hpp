#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "corn/rng.hpp"

namespace corn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

bool is_finite(const Vec3& v);

// Unit quaternion, canonicalized so that qw >= 0 (and, when qw == 0, the
// first non-zero vector component is positive).
class Rotation {
public:
    Rotation() = default;
    // Normalizes the input; throws DegenerateInput on zero or non-finite input.
    Rotation(double qx, double qy, double qz, double qw);
    explicit Rotation(const Eigen::Quaterniond& q);

    static Rotation identity() { return {}; }
    static Rotation from_matrix(const Mat3& m);
    static Rotation from_axis_angle(const Vec3& axis, double angle);
    // Exponential map of a rotation vector (axis * angle).
    static Rotation from_rotation_vector(const Vec3& rv);

    double x() const { return q_.x(); }
    double y() const { return q_.y(); }
    double z() const { return q_.z(); }
    double w() const { return q_.w(); }
    const Eigen::Quaterniond& quaternion() const { return q_; }
    Mat3 matrix() const { return q_.toRotationMatrix(); }

    Vec3 rotate(const Vec3& v) const { return q_ * v; }
    Rotation inverse() const { return Rotation(q_.conjugate()); }
    // Logarithm map: rotation vector with angle in [0, pi].
    Vec3 rotation_vector() const;
    // Geodesic angle to `other`, in [0, pi].
    double angle_to(const Rotation& other) const;

    friend Rotation operator*(const Rotation& a, const Rotation& b) {
        return Rotation(a.q_ * b.q_);
    }

private:
    Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

// First two columns of a rotation matrix: (c1x, c1y, c1z, c2x, c2y, c2z).
struct Rot6D {
    std::array<double, 6> v{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
};

Rot6D rot_to_6d(const Rotation& r);
// Gram-Schmidt; throws DegenerateInput when either column collapses.
Rotation rot_from_6d(const Rot6D& r);

class Pose {
public:
    Pose() = default;
    Pose(const Vec3& translation, const Rotation& rotation)
        : translation_(translation), rotation_(rotation) {}

    static Pose identity() { return {}; }
    static Pose from_translation(const Vec3& t) { return {t, Rotation{}}; }

    const Vec3& translation() const { return translation_; }
    const Rotation& rotation() const { return rotation_; }

    Vec3 apply(const Vec3& p) const { return rotation_.rotate(p) + translation_; }
    Pose inverse() const;

    // (tx, ty, tz, qx, qy, qz, qw)
    std::array<double, 7> to_array() const;
    static Pose from_array(std::span<const double> a);

private:
    Vec3 translation_ = Vec3::Zero();
    Rotation rotation_;
};

// Group operation: (a * b).apply(p) == a.apply(b.apply(p)).
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    Aabb() = default;
    // Throws DegenerateInput unless min <= max componentwise.
    Aabb(const Vec3& lo, const Vec3& hi);

    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    Vec3 extent() const { return max - min; }
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or one unit vector per point

    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }

    PointCloud transformed(const Pose& pose) const;
    PointCloud subset(std::span<const std::size_t> indices) const;
    Vec3 centroid() const;
};

using Face = std::array<std::uint32_t, 3>;

class TriMesh {
public:
    static constexpr double kMinFaceArea = 1e-12;

    TriMesh() = default;
    // Validates indices (DegenerateInput when out of range), drops faces below
    // kMinFaceArea and records whether every edge is shared by exactly two faces.
    TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    std::size_t num_faces() const { return faces_.size(); }
    bool empty() const { return faces_.empty(); }
    bool watertight() const { return watertight_; }

    Vec3 corner(std::size_t face, int k) const { return vertices_[faces_[face][k]]; }
    double face_area(std::size_t face) const;
    double surface_area() const;
    Aabb bounds() const;

    TriMesh transformed(const Pose& pose) const;
    TriMesh translated(const Vec3& t) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    bool watertight_ = false;
};

// ASCII OBJ subset: `v x y z` and `f i j k` (1-based; `i/t/n` forms keep the
// vertex index). Other statements are ignored; a face with a vertex count
// other than three is a Parse error.
TriMesh parse_obj(std::string_view text);
TriMesh load_obj(const std::filesystem::path& path);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

// Area-weighted face choice, sqrt-barycentric point in the triangle.
PointCloud sample_surface_points(const TriMesh& mesh, std::size_t n, Rng& rng);

// Ray-parity containment; throws NotWatertight.
bool point_in_mesh(const Vec3& p, const TriMesh& mesh);

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct NearestPoint {
    Vec3 point;
    double distance;
    std::size_t face;
};

NearestPoint nearest_point_on_mesh(const Vec3& p, const TriMesh& mesh);

// delta = b* - a*, where a* ranges over the given samples of the first shape
// and b* is the exact nearest point on `b`. Translating `b` by -delta moves
// b* onto a*.
Vec3 nearest_displacement(std::span<const Vec3> a_samples, const TriMesh& b);
Vec3 nearest_displacement(const TriMesh& a, const TriMesh& b, std::size_t m, Rng& rng);

}  // namespace corn
