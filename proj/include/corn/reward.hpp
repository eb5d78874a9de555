#pragma once

#include <span>

#include "corn/geom.hpp"

namespace corn {

struct RewardParams {
    double k_g = 0.302;    // goal-reaching coefficient
    double k_r = 0.0604;   // contact coefficient
    double k_e = 0.0001;   // energy coefficient
    double k_d = 243.12;   // distance scale inside the potential exponent
    double gamma = 0.99;
    double success_translation = 0.05;  // m
    double success_rotation = 0.1;      // rad

    void validate() const;
};

struct ObjectState {
    Pose pose;
    Pose goal;
    Vec3 half_extents = Vec3::Constant(0.05);
    Vec3 com = Vec3::Zero();  // object frame
    Vec3 gripper_tip = Vec3::Zero();  // world frame
    std::array<double, 7> torques{};
    std::array<double, 7> joint_velocities{};
};

// Mean distance between corresponding corners of the box placed at both poses.
double bbox_distance(const Pose& pose, const Pose& goal, const Vec3& half_extents);

bool success_from_errors(double translation_error, double rotation_error, const RewardParams& params = {});
bool success(const ObjectState& state, const RewardParams& params = {});

double potential_reach(double d_og, const RewardParams& params = {});
double potential_contact(double d_ho, const RewardParams& params = {});
double shaped_reward(double phi_prev, double phi_next, const RewardParams& params = {});

// k_e * sum(tau_i * qdot_i); throws SizeMismatch on unequal lengths.
double energy_penalty(std::span<const double> tau, std::span<const double> qdot, const RewardParams& params = {});

// Distance from the world-frame COM to the gripper tip.
double hand_object_distance(const ObjectState& state);

struct RewardTerms {
    double success = 0.0;
    double reach = 0.0;
    double contact = 0.0;
    double energy = 0.0;
    double total = 0.0;
};

// Energy uses the torques and velocities of state_next.
RewardTerms reward_terms(const ObjectState& state_prev, const ObjectState& state_next, bool success_flag,
                         const RewardParams& params = {});
double total_reward(const ObjectState& state_prev, const ObjectState& state_next, bool success_flag,
                    const RewardParams& params = {});

}  // namespace corn
