#include "corn/control.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "corn/error.hpp"

namespace corn {

namespace {

Pose rot_x(double a) { return {Vec3::Zero(), Rotation::from_axis_angle(Vec3::UnitX(), a)}; }
Pose rot_z(double a) { return {Vec3::Zero(), Rotation::from_axis_angle(Vec3::UnitZ(), a)}; }
Pose trans(double x, double y, double z) { return Pose::from_translation(Vec3(x, y, z)); }

double twist_norm(const Twist& e) { return e.norm(); }

}  // namespace

void SerialChain::validate() {
    for (auto& j : joints) {
        const double n = j.axis.norm();
        if (!std::isfinite(n) || n < 1e-12) throw Error(ErrorCode::DegenerateInput, "joint axis must be non-zero");
        j.axis /= n;
    }
}

SerialChain SerialChain::franka() {
    constexpr double pi = std::numbers::pi;
    // (a, d, alpha) per joint, modified DH.
    constexpr double dh[kChainJoints][3] = {
        {0.0, 0.333, 0.0},      {0.0, 0.0, -pi / 2}, {0.0, 0.316, pi / 2}, {0.0825, 0.0, pi / 2},
        {-0.0825, 0.384, -pi / 2}, {0.0, 0.0, pi / 2},  {0.088, 0.0, pi / 2},
    };
    SerialChain c;
    for (int i = 0; i < kChainJoints; ++i) {
        c.joints[std::size_t(i)].origin = rot_x(dh[i][2]) * trans(dh[i][0], 0, 0) * trans(0, 0, dh[i][1]);
        c.joints[std::size_t(i)].axis = Vec3::UnitZ();
    }
    c.ee_offset = trans(0, 0, 0.107) * rot_z(-pi / 4) * trans(0, 0, 0.1034);
    return c;
}

SerialChain parse_chain(std::string_view text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("chain json: ") + e.what());
    }
    auto reals = [](const json& j, std::size_t n, const char* what) {
        if (!j.is_array() || j.size() != n) {
            throw Error(ErrorCode::Parse, std::string("chain json: ") + what + " needs " + std::to_string(n) + " reals");
        }
        std::vector<double> v;
        for (const auto& x : j) {
            if (!x.is_number()) throw Error(ErrorCode::Parse, std::string("chain json: non-numeric ") + what);
            v.push_back(x.get<double>());
        }
        return v;
    };
    if (!doc.is_object() || !doc.contains("joints") || !doc["joints"].is_array() ||
        doc["joints"].size() != std::size_t(kChainJoints)) {
        throw Error(ErrorCode::Parse, "chain json: expected 7 joints");
    }
    SerialChain c;
    for (std::size_t i = 0; i < std::size_t(kChainJoints); ++i) {
        const auto& j = doc["joints"][i];
        if (!j.is_object() || !j.contains("origin") || !j.contains("axis")) {
            throw Error(ErrorCode::Parse, "chain json: joint needs origin and axis");
        }
        c.joints[i].origin = Pose::from_array(reals(j["origin"], 7, "origin"));
        const auto a = reals(j["axis"], 3, "axis");
        c.joints[i].axis = Vec3(a[0], a[1], a[2]);
    }
    if (doc.contains("ee_offset")) c.ee_offset = Pose::from_array(reals(doc["ee_offset"], 7, "ee_offset"));
    c.validate();
    return c;
}

SerialChain load_chain(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_chain(ss.str());
}

namespace {

// World frame of each joint after applying its rotation, plus the end effector.
struct ChainFrames {
    std::array<Pose, kChainJoints> joint;  // frame in which axis_i is expressed
    Pose ee;
};

ChainFrames frames(const SerialChain& chain, const JointVector& q) {
    ChainFrames f;
    Pose t;
    for (int i = 0; i < kChainJoints; ++i) {
        const auto& j = chain.joints[std::size_t(i)];
        t = t * j.origin;
        f.joint[std::size_t(i)] = t;
        t = t * Pose(Vec3::Zero(), Rotation::from_axis_angle(j.axis, q[i]));
    }
    f.ee = t * chain.ee_offset;
    return f;
}

}  // namespace

Pose fk(const SerialChain& chain, const JointVector& q) { return frames(chain, q).ee; }

Jacobian jacobian(const SerialChain& chain, const JointVector& q) {
    const ChainFrames f = frames(chain, q);
    const Vec3 p_ee = f.ee.translation();
    Jacobian jac;
    for (int i = 0; i < kChainJoints; ++i) {
        const Pose& fr = f.joint[std::size_t(i)];
        const Vec3 axis = fr.rotation().rotate(chain.joints[std::size_t(i)].axis);
        jac.block<3, 1>(0, i) = axis.cross(p_ee - fr.translation());
        jac.block<3, 1>(3, i) = axis;
    }
    return jac;
}

JointVector dls_step(const Jacobian& j, const Twist& error, double lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidConfig, "damping must be > 0");
    const Eigen::Matrix<double, 6, 6> a =
        j * j.transpose() + lambda * lambda * Eigen::Matrix<double, 6, 6>::Identity();
    const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
        throw Error(ErrorCode::SingularSolve, "damped least-squares system is singular");
    }
    const Twist y = ldlt.solve(error);
    return j.transpose() * y;
}

void IkConfig::validate() const {
    if (!(damping > 0.0)) throw Error(ErrorCode::InvalidConfig, "ik damping must be > 0");
    if (max_iters < 0 || max_halvings < 0) throw Error(ErrorCode::InvalidConfig, "ik iteration limits must be >= 0");
    if (!(tol_translation > 0.0) || !(tol_rotation > 0.0) || !(step_clamp > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "ik tolerances and step clamp must be > 0");
    }
}

Twist pose_error(const Pose& target, const Pose& current) {
    Twist e;
    e.head<3>() = target.translation() - current.translation();
    e.tail<3>() = (target.rotation() * current.rotation().inverse()).rotation_vector();
    return e;
}

Pose apply_residual(const Pose& current, const Pose& residual) {
    return {current.translation() + residual.translation(), residual.rotation() * current.rotation()};
}

IkResult ik(const SerialChain& chain, const JointVector& q0, const Pose& residual, const IkConfig& cfg) {
    cfg.validate();
    if (!q0.allFinite() || !is_finite(residual.translation())) {
        throw Error(ErrorCode::NonFiniteInput, "ik inputs must be finite");
    }
    const Pose target = apply_residual(fk(chain, q0), residual);
    IkResult r;
    r.q = q0;
    Twist e = pose_error(target, fk(chain, r.q));
    double err = twist_norm(e);
    auto converged = [&](const Twist& t) {
        return t.head<3>().norm() <= cfg.tol_translation && t.tail<3>().norm() <= cfg.tol_rotation;
    };
    r.status = IkStatus::MaxIterations;
    while (true) {
        if (converged(e)) {
            r.status = IkStatus::Converged;
            break;
        }
        if (r.iterations >= cfg.max_iters) break;
        JointVector dq = dls_step(jacobian(chain, r.q), e, cfg.damping);
        const double peak = dq.cwiseAbs().maxCoeff();
        if (peak > cfg.step_clamp) dq *= cfg.step_clamp / peak;
        bool improved = false;
        for (int h = 0; h <= cfg.max_halvings; ++h) {
            const JointVector cand = r.q + dq;
            const Twist ce = pose_error(target, fk(chain, cand));
            const double cerr = twist_norm(ce);
            if (cerr < err) {
                r.q = cand;
                e = ce;
                err = cerr;
                improved = true;
                break;
            }
            dq *= 0.5;
        }
        ++r.iterations;
        if (!improved) {
            r.status = IkStatus::NoProgress;
            break;
        }
    }
    r.translation_error = e.head<3>().norm();
    r.rotation_error = e.tail<3>().norm();
    return r;
}

JointVector torque(const JointVector& kp, const JointVector& rho, const JointVector& q_target, const JointVector& q,
                   const JointVector& qdot) {
    if (!((kp.array() > 0.0).all() && (rho.array() > 0.0).all())) {
        throw Error(ErrorCode::NonPositiveGains, "kp and rho must be > 0");
    }
    const JointVector kd = rho.array() * kp.array().sqrt();
    return kp.cwiseProduct(q_target - q) - kd.cwiseProduct(qdot);
}

}  // namespace corn
