#pragma once

#include <array>
#include <filesystem>
#include <string_view>

#include <Eigen/Core>

#include "corn/geom.hpp"

namespace corn {

inline constexpr int kChainJoints = 7;

using JointVector = Eigen::Matrix<double, kChainJoints, 1>;
using Twist = Eigen::Matrix<double, 6, 1>;
using Jacobian = Eigen::Matrix<double, 6, kChainJoints>;

struct ChainJoint {
    Pose origin;             // fixed transform from the previous joint frame
    Vec3 axis = Vec3::UnitZ();  // rotation axis in this joint's frame
};

// Revolute serial chain: T(q) = prod_i origin_i * Rot(axis_i, q_i), then ee_offset.
struct SerialChain {
    std::array<ChainJoint, kChainJoints> joints;
    Pose ee_offset;

    // Normalizes axes; throws DegenerateInput on a zero or non-finite axis.
    void validate();

    // 7-DoF arm with Franka Panda link geometry (modified DH) and a hand offset.
    static SerialChain franka();
};

// {"joints": [{"origin": [tx,ty,tz,qx,qy,qz,qw], "axis": [x,y,z]} x7], "ee_offset": [7 reals]}
SerialChain parse_chain(std::string_view json_text);
SerialChain load_chain(const std::filesystem::path& path);

struct JointState {
    JointVector q = JointVector::Zero();
    JointVector qdot = JointVector::Zero();
};

Pose fk(const SerialChain& chain, const JointVector& q);

// Geometric Jacobian in the world frame: rows (linear; angular).
Jacobian jacobian(const SerialChain& chain, const JointVector& q);

// dq = J^T (J J^T + lambda^2 I)^-1 e
JointVector dls_step(const Jacobian& j, const Twist& error, double lambda);

struct IkConfig {
    double damping = 0.05;
    int max_iters = 32;
    double tol_translation = 1e-4;  // m
    double tol_rotation = 1e-3;     // rad
    double step_clamp = 0.2;        // rad per joint per iteration
    int max_halvings = 8;

    void validate() const;
};

// [p_target - p; rotation vector of R_target * R^T]
Twist pose_error(const Pose& target, const Pose& current);

// Residual applied in the world frame about the current end-effector point:
// p' = p + dt, R' = dR * R.
Pose apply_residual(const Pose& current, const Pose& residual);

enum class IkStatus { Converged, MaxIterations, NoProgress };

struct IkResult {
    JointVector q = JointVector::Zero();
    IkStatus status = IkStatus::Converged;
    int iterations = 0;
    double translation_error = 0.0;
    double rotation_error = 0.0;

    bool no_progress() const { return status != IkStatus::Converged; }
};

IkResult ik(const SerialChain& chain, const JointVector& q, const Pose& residual, const IkConfig& cfg = {});

// tau = kp (q_target - q) - rho sqrt(kp) qdot; throws NonPositiveGains.
JointVector torque(const JointVector& kp, const JointVector& rho, const JointVector& q_target, const JointVector& q,
                   const JointVector& qdot);

}  // namespace corn
