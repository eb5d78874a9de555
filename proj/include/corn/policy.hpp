#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "corn/checkpoint.hpp"
#include "corn/geom.hpp"
#include "corn/nn.hpp"

namespace corn {

inline constexpr std::size_t kJoints = 7;
inline constexpr std::size_t kActionDim = 20;  // dt 3 + dr 3 + kp 7 + rho 7

struct ActionCommand {
    Vec3 delta_translation = Vec3::Zero();  // m
    Vec3 delta_rotation = Vec3::Zero();     // axis-angle, rad
    std::array<double, kJoints> kp{1, 1, 1, 1, 1, 1, 1};
    std::array<double, kJoints> damping{1, 1, 1, 1, 1, 1, 1};

    std::array<double, kActionDim> flatten() const;
    // Throws NonPositiveGains unless every gain is > 0.
    void validate() const;
};

struct TaskInputs {
    std::array<double, kJoints> joint_position{};
    std::array<double, kJoints> joint_velocity{};
    ActionCommand previous_action;
    Pose relative_goal_pose;
    double mass = 0.3;  // kg
    double friction = 0.85;
    double restitution = 0.5;
};

// Physics ranges used for min-max normalization of the task vector.
struct PhysicsRanges {
    double mass_min = 0.1, mass_max = 0.5;
    double friction_min = 0.7, friction_max = 1.0;
    double restitution_min = 0.0, restitution_max = 1.0;
};

inline constexpr std::size_t kTaskFeatures = 7 + 7 + kActionDim + 9 + 3;

std::array<double, kTaskFeatures> task_features(const TaskInputs& task, const PhysicsRanges& ranges = {});

struct PolicyConfig {
    std::size_t d_model = 128;
    std::size_t n_queries = 4;
    std::size_t n_heads = 16;
    std::array<std::size_t, 3> shared{512, 256, 128};
    std::size_t head_hidden = 64;
    PhysicsRanges physics;

    void validate() const;
};

struct PolicyParams {
    PolicyConfig cfg;
    nn::Mlp2 task_mlp;      // task vector -> task feature
    nn::Linear query_proj;  // task feature -> n_queries * d_model
    nn::Linear wq, wk, wv, wo;
    std::array<nn::Linear, 3> shared;
    nn::Mlp2 actor;   // -> 20
    nn::Mlp2 critic;  // -> 1

    PolicyParams() = default;
    explicit PolicyParams(const PolicyConfig& cfg);
    static PolicyParams initialized(const PolicyConfig& cfg, std::uint64_t seed);

    NamedTensors tensors() const;  // names prefixed "policy."
    // Loads tensors whose names match; returns false if any are missing.
    bool load(const NamedTensors& tensors);
};

// heads x queries x patches, row-major.
struct AttentionTensor {
    std::size_t heads = 0, queries = 0, patches = 0;
    std::vector<double> values;

    double at(std::size_t h, std::size_t q, std::size_t p) const { return values[(h * queries + q) * patches + p]; }
};

struct PolicyOutput {
    std::array<double, kActionDim> action{};  // gains already mapped through softplus
    ActionCommand command;
    double value = 0.0;
    AttentionTensor attention;
};

double softplus(double x);

PolicyOutput policy_forward(const PolicyParams& params, const nn::RowMat& patch_embeddings, const TaskInputs& task);

// Sum over heads and queries per patch, min-max normalized to [0, 1];
// a constant map becomes all 0.5.
std::vector<double> attention_map(const AttentionTensor& attention);

}  // namespace corn
