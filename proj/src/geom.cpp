#include "corn/geom.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "corn/error.hpp"

namespace corn {

bool is_finite(const Vec3& v) { return v.allFinite(); }

// ---------------------------------------------------------------- rotation

Rotation::Rotation(double qx, double qy, double qz, double qw)
    : Rotation(Eigen::Quaterniond(qw, qx, qy, qz)) {}

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(q) {
    const double n = q_.norm();
    if (!std::isfinite(n) || n < 1e-300) {
        throw Error(ErrorCode::DegenerateInput, "quaternion has zero or non-finite norm");
    }
    q_.coeffs() /= n;
    bool flip = q_.w() < 0.0;
    if (q_.w() == 0.0) {
        for (int i = 0; i < 3; ++i) {
            if (q_.coeffs()[i] != 0.0) {
                flip = q_.coeffs()[i] < 0.0;
                break;
            }
        }
    }
    if (flip) q_.coeffs() = -q_.coeffs();
}

Rotation Rotation::from_matrix(const Mat3& m) { return Rotation(Eigen::Quaterniond(m)); }

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::DegenerateInput, "zero rotation axis");
    return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis / n)));
}

Rotation Rotation::from_rotation_vector(const Vec3& rv) {
    const double angle = rv.norm();
    if (angle < 1e-12) {
        // First-order expansion of the exponential map.
        return Rotation(Eigen::Quaterniond(1.0, 0.5 * rv.x(), 0.5 * rv.y(), 0.5 * rv.z()));
    }
    return from_axis_angle(rv / angle, angle);
}

Vec3 Rotation::rotation_vector() const {
    const Vec3 v = q_.vec();
    const double s = v.norm();
    if (s < 1e-12) return 2.0 * v;
    const double angle = 2.0 * std::atan2(s, q_.w());
    return v * (angle / s);
}

double Rotation::angle_to(const Rotation& other) const {
    const Eigen::Quaterniond d = q_.conjugate() * other.q_;
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

Rot6D rot_to_6d(const Rotation& r) {
    const Mat3 m = r.matrix();
    return Rot6D{{m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)}};
}

Rotation rot_from_6d(const Rot6D& r) {
    const Vec3 a(r.v[0], r.v[1], r.v[2]);
    const Vec3 b(r.v[3], r.v[4], r.v[5]);
    const double na = a.norm();
    if (!(na > 1e-9)) throw Error(ErrorCode::DegenerateInput, "6D rotation: first column collapsed");
    const Vec3 c1 = a / na;
    const Vec3 b_perp = b - c1.dot(b) * c1;
    const double nb = b_perp.norm();
    if (!(nb > 1e-9)) throw Error(ErrorCode::DegenerateInput, "6D rotation: columns are parallel");
    const Vec3 c2 = b_perp / nb;
    Mat3 m;
    m.col(0) = c1;
    m.col(1) = c2;
    m.col(2) = c1.cross(c2);
    return Rotation::from_matrix(m);
}

// -------------------------------------------------------------------- pose

Pose Pose::inverse() const {
    const Rotation inv = rotation_.inverse();
    return Pose(-inv.rotate(translation_), inv);
}

std::array<double, 7> Pose::to_array() const {
    return {translation_.x(), translation_.y(), translation_.z(),
            rotation_.x(),    rotation_.y(),    rotation_.z(), rotation_.w()};
}

Pose Pose::from_array(std::span<const double> a) {
    if (a.size() != 7) throw Error(ErrorCode::SizeMismatch, "pose needs 7 values");
    return Pose(Vec3(a[0], a[1], a[2]), Rotation(a[3], a[4], a[5], a[6]));
}

Pose compose(const Pose& a, const Pose& b) {
    return Pose(a.rotation().rotate(b.translation()) + a.translation(),
                a.rotation() * b.rotation());
}

Aabb::Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {
    if (!is_finite(lo) || !is_finite(hi) || (lo.array() > hi.array()).any()) {
        throw Error(ErrorCode::DegenerateInput, "aabb requires finite min <= max");
    }
}

// ------------------------------------------------------------- point cloud

PointCloud PointCloud::transformed(const Pose& pose) const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(pose.apply(p));
    if (has_normals()) {
        out.normals.reserve(normals.size());
        for (const auto& n : normals) out.normals.push_back(pose.rotation().rotate(n));
    }
    return out;
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    for (auto i : indices) out.points.push_back(points.at(i));
    if (has_normals()) {
        out.normals.reserve(indices.size());
        for (auto i : indices) out.normals.push_back(normals[i]);
    }
    return out;
}

Vec3 PointCloud::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
}

// -------------------------------------------------------------------- mesh

namespace {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)) {
    for (const auto& v : vertices_) {
        if (!is_finite(v)) throw Error(ErrorCode::DegenerateInput, "non-finite mesh vertex");
    }
    faces_.reserve(faces.size());
    for (const auto& f : faces) {
        for (auto idx : f) {
            if (idx >= vertices_.size()) {
                throw Error(ErrorCode::DegenerateInput, "face index out of range");
            }
        }
        if (triangle_area(vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]) >= kMinFaceArea) {
            faces_.push_back(f);
        }
    }
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
    for (const auto& f : faces_) {
        for (int k = 0; k < 3; ++k) {
            auto a = f[k], b = f[(k + 1) % 3];
            edge_use[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    watertight_ = !faces_.empty() &&
                  std::all_of(edge_use.begin(), edge_use.end(),
                              [](const auto& kv) { return kv.second == 2; });
}

double TriMesh::face_area(std::size_t face) const {
    return triangle_area(corner(face, 0), corner(face, 1), corner(face, 2));
}

double TriMesh::surface_area() const {
    double total = 0.0;
    for (std::size_t i = 0; i < faces_.size(); ++i) total += face_area(i);
    return total;
}

Aabb TriMesh::bounds() const {
    if (vertices_.empty()) return {};
    Vec3 lo = vertices_.front(), hi = vertices_.front();
    for (const auto& v : vertices_) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return Aabb(lo, hi);
}

TriMesh TriMesh::transformed(const Pose& pose) const {
    TriMesh out = *this;
    for (auto& v : out.vertices_) v = pose.apply(v);
    return out;
}

TriMesh TriMesh::translated(const Vec3& t) const {
    TriMesh out = *this;
    for (auto& v : out.vertices_) v += t;
    return out;
}

// --------------------------------------------------------------------- obj

TriMesh parse_obj(std::string_view text) {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) {
                throw Error(ErrorCode::Parse, "bad vertex on line " + std::to_string(line_no));
            }
            vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<long> idx;
            std::string tok;
            while (ls >> tok) {
                const std::string head = tok.substr(0, tok.find('/'));
                long value = 0;
                auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
                if (ec != std::errc() || ptr != head.data() + head.size() || value < 1) {
                    throw Error(ErrorCode::Parse, "bad face index on line " + std::to_string(line_no));
                }
                idx.push_back(value);
            }
            if (idx.size() != 3) {
                throw Error(ErrorCode::Parse, "non-triangle face on line " + std::to_string(line_no));
            }
            faces.push_back({static_cast<std::uint32_t>(idx[0] - 1),
                             static_cast<std::uint32_t>(idx[1] - 1),
                             static_cast<std::uint32_t>(idx[2] - 1)});
        }
    }
    return TriMesh(std::move(vertices), std::move(faces));
}

TriMesh load_obj(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_obj(ss.str());
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f.precision(17);
    for (const auto& v : mesh.vertices()) f << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.faces()) f << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------- sampling

PointCloud sample_surface_points(const TriMesh& mesh, std::size_t n, Rng& rng) {
    if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "cannot sample an empty mesh");
    std::vector<double> cumulative(mesh.num_faces());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.num_faces(); ++i) {
        total += mesh.face_area(i);
        cumulative[i] = total;
    }
    PointCloud out;
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t face =
            std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), mesh.num_faces() - 1);
        const double s = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        out.points.push_back((1.0 - s) * mesh.corner(face, 0) + s * (1.0 - r2) * mesh.corner(face, 1) +
                             s * r2 * mesh.corner(face, 2));
    }
    return out;
}

// ------------------------------------------------------------- containment

namespace {

constexpr double kEdgeTolerance = 1e-9;

struct RayCast {
    int crossings = 0;
    bool degenerate = false;
};

RayCast cast_ray(const Vec3& origin, const Vec3& dir, const TriMesh& mesh) {
    RayCast result;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Vec3 a = mesh.corner(f, 0), b = mesh.corner(f, 1), c = mesh.corner(f, 2);
        const Vec3 e1 = b - a, e2 = c - a;
        const Vec3 pvec = dir.cross(e2);
        const double det = e1.dot(pvec);
        const Vec3 normal = e1.cross(e2);
        const double twice_area = normal.norm();
        if (std::abs(det) <= 1e-12 * twice_area) {
            // Ray parallel to the face plane: only matters when it runs inside it.
            if (std::abs((origin - a).dot(normal)) <= kEdgeTolerance * twice_area) {
                const Vec3 q = closest_point_on_triangle(origin, a, b, c);
                if ((q - origin).cross(dir).norm() <= kEdgeTolerance) result.degenerate = true;
            }
            continue;
        }
        const double inv = 1.0 / det;
        const Vec3 tvec = origin - a;
        const double u = tvec.dot(pvec) * inv;
        const Vec3 qvec = tvec.cross(e1);
        const double v = dir.dot(qvec) * inv;
        const double t = e2.dot(qvec) * inv;
        if (t <= 0.0) continue;
        const double w = 1.0 - u - v;
        // Barycentric weight times the opposite altitude is the distance to that edge.
        const double d_bc = w * twice_area / (c - b).norm();
        const double d_ca = u * twice_area / (a - c).norm();
        const double d_ab = v * twice_area / (b - a).norm();
        const double lo = std::min({d_bc, d_ca, d_ab});
        if (lo > kEdgeTolerance) {
            ++result.crossings;
        } else if (lo > -kEdgeTolerance) {
            result.degenerate = true;
        }
    }
    return result;
}

const std::array<Vec3, 3>& ray_directions() {
    static const std::array<Vec3, 3> dirs = {
        Vec3(0.5773502691896258, 0.3141592653589793, 0.7535533905932737).normalized(),
        Vec3(-0.2718281828459045, 0.8660254037844386, -0.4142135623730950).normalized(),
        Vec3(0.6180339887498949, -0.7071067811865476, -0.3183098861837907).normalized(),
    };
    return dirs;
}

}  // namespace

bool point_in_mesh(const Vec3& p, const TriMesh& mesh) {
    if (!mesh.watertight()) throw Error(ErrorCode::NotWatertight, "containment needs a watertight mesh");
    if (!mesh.bounds().contains(p)) return false;
    const auto& dirs = ray_directions();
    const RayCast first = cast_ray(p, dirs[0], mesh);
    if (!first.degenerate) return first.crossings % 2 == 1;
    int votes = first.crossings % 2;
    for (int k = 1; k < 3; ++k) votes += cast_ray(p, dirs[k], mesh).crossings % 2;
    return votes >= 2;
}

// ----------------------------------------------------------- nearest point

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Voronoi-region walk over vertices, edges and the face interior.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    }
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

NearestPoint nearest_point_on_mesh(const Vec3& p, const TriMesh& mesh) {
    if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "nearest point on an empty mesh");
    NearestPoint best{Vec3::Zero(), std::numeric_limits<double>::infinity(), 0};
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const Vec3 q = closest_point_on_triangle(p, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_sq) {
            best_sq = d2;
            best.point = q;
            best.face = f;
        }
    }
    best.distance = std::sqrt(best_sq);
    return best;
}

Vec3 nearest_displacement(std::span<const Vec3> a_samples, const TriMesh& b) {
    if (a_samples.empty() || b.empty()) {
        throw Error(ErrorCode::EmptyMesh, "nearest displacement needs samples and a non-empty mesh");
    }
    double best = std::numeric_limits<double>::infinity();
    Vec3 delta = Vec3::Zero();
    for (const auto& a : a_samples) {
        const NearestPoint np = nearest_point_on_mesh(a, b);
        if (np.distance < best) {
            best = np.distance;
            delta = np.point - a;
        }
    }
    return delta;
}

Vec3 nearest_displacement(const TriMesh& a, const TriMesh& b, std::size_t m, Rng& rng) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyMesh, "nearest displacement on an empty mesh");
    if (m == 0) throw Error(ErrorCode::DegenerateInput, "sample count must be positive");
    const PointCloud samples = sample_surface_points(a, m, rng);
    return nearest_displacement(samples.points, b);
}

}  // namespace corn
