#include "corn/reward.hpp"

#include <cmath>

#include "corn/error.hpp"

namespace corn {

void RewardParams::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidConfig, "gamma must lie in [0, 1)");
    if (!(k_g >= 0.0 && k_r >= 0.0 && k_e >= 0.0 && k_d >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "reward coefficients must be >= 0");
    }
    if (!(success_translation > 0.0 && success_rotation > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "success thresholds must be > 0");
    }
}

double bbox_distance(const Pose& pose, const Pose& goal, const Vec3& h) {
    double sum = 0.0;
    for (int c = 0; c < 8; ++c) {
        const Vec3 corner((c & 1) ? h.x() : -h.x(), (c & 2) ? h.y() : -h.y(), (c & 4) ? h.z() : -h.z());
        sum += (pose.apply(corner) - goal.apply(corner)).norm();
    }
    return sum / 8.0;
}

bool success_from_errors(double translation_error, double rotation_error, const RewardParams& p) {
    return translation_error < p.success_translation && rotation_error < p.success_rotation;
}

bool success(const ObjectState& s, const RewardParams& p) {
    const double dt = (s.pose.translation() - s.goal.translation()).norm();
    return success_from_errors(dt, s.pose.rotation().angle_to(s.goal.rotation()), p);
}

double potential_reach(double d, const RewardParams& p) { return p.k_g * std::pow(p.gamma, p.k_d * d); }

double potential_contact(double d, const RewardParams& p) { return p.k_r * std::pow(p.gamma, p.k_d * d); }

double shaped_reward(double phi_prev, double phi_next, const RewardParams& p) { return p.gamma * phi_next - phi_prev; }

double energy_penalty(std::span<const double> tau, std::span<const double> qdot, const RewardParams& p) {
    if (tau.size() != qdot.size()) throw Error(ErrorCode::SizeMismatch, "torque and velocity lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) s += tau[i] * qdot[i];
    return p.k_e * s;
}

double hand_object_distance(const ObjectState& s) { return (s.pose.apply(s.com) - s.gripper_tip).norm(); }

RewardTerms reward_terms(const ObjectState& a, const ObjectState& b, bool success_flag, const RewardParams& p) {
    RewardTerms t;
    t.success = success_flag ? 1.0 : 0.0;
    t.reach = shaped_reward(potential_reach(bbox_distance(a.pose, a.goal, a.half_extents), p),
                            potential_reach(bbox_distance(b.pose, b.goal, b.half_extents), p), p);
    t.contact = shaped_reward(potential_contact(hand_object_distance(a), p),
                              potential_contact(hand_object_distance(b), p), p);
    t.energy = energy_penalty(b.torques, b.joint_velocities, p);
    t.total = t.success + t.reach + t.contact - t.energy;
    return t;
}

double total_reward(const ObjectState& a, const ObjectState& b, bool success_flag, const RewardParams& p) {
    return reward_terms(a, b, success_flag, p).total;
}

}  // namespace corn
