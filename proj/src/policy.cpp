#include "corn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "corn/error.hpp"

namespace corn {

using nn::RowMat;

std::array<double, kActionDim> ActionCommand::flatten() const {
    std::array<double, kActionDim> a{};
    for (int k = 0; k < 3; ++k) {
        a[std::size_t(k)] = delta_translation[k];
        a[std::size_t(3 + k)] = delta_rotation[k];
    }
    for (std::size_t j = 0; j < kJoints; ++j) {
        a[6 + j] = kp[j];
        a[6 + kJoints + j] = damping[j];
    }
    return a;
}

void ActionCommand::validate() const {
    for (std::size_t j = 0; j < kJoints; ++j) {
        if (!(kp[j] > 0.0) || !(damping[j] > 0.0)) throw Error(ErrorCode::NonPositiveGains, "gains must be > 0");
    }
}

std::array<double, kTaskFeatures> task_features(const TaskInputs& t, const PhysicsRanges& r) {
    std::array<double, kTaskFeatures> f{};
    std::size_t i = 0;
    for (double v : t.joint_position) f[i++] = v;
    for (double v : t.joint_velocity) f[i++] = v;
    for (double v : t.previous_action.flatten()) f[i++] = v;
    const Vec3& p = t.relative_goal_pose.translation();
    for (int k = 0; k < 3; ++k) f[i++] = p[k];
    for (double v : rot_to_6d(t.relative_goal_pose.rotation()).v) f[i++] = v;
    auto norm = [](double x, double lo, double hi) { return (x - lo) / (hi - lo); };
    f[i++] = norm(t.mass, r.mass_min, r.mass_max);
    f[i++] = norm(t.friction, r.friction_min, r.friction_max);
    f[i++] = norm(t.restitution, r.restitution_min, r.restitution_max);
    return f;
}

void PolicyConfig::validate() const {
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0 || n_queries == 0) {
        throw Error(ErrorCode::InvalidConfig, "policy d_model must be a positive multiple of n_heads");
    }
    if (shared[0] == 0 || shared[1] == 0 || shared[2] == 0 || head_hidden == 0) {
        throw Error(ErrorCode::InvalidConfig, "policy layer sizes must be positive");
    }
}

PolicyParams::PolicyParams(const PolicyConfig& c)
    : cfg(c),
      task_mlp(kTaskFeatures, c.d_model, c.d_model),
      query_proj(c.d_model, c.n_queries * c.d_model),
      wq(c.d_model, c.d_model),
      wk(c.d_model, c.d_model),
      wv(c.d_model, c.d_model),
      wo(c.d_model, c.d_model),
      shared{nn::Linear(c.n_queries * c.d_model + kTaskFeatures, c.shared[0]), nn::Linear(c.shared[0], c.shared[1]),
             nn::Linear(c.shared[1], c.shared[2])},
      actor(c.shared[2], c.head_hidden, kActionDim),
      critic(c.shared[2], c.head_hidden, 1) {
    c.validate();
}

PolicyParams PolicyParams::initialized(const PolicyConfig& cfg, std::uint64_t seed) {
    PolicyParams p(cfg);
    Rng rng(seed);
    p.task_mlp.init(rng);
    p.query_proj.init(rng);
    for (auto* l : {&p.wq, &p.wk, &p.wv, &p.wo}) l->init(rng);
    for (auto& l : p.shared) l.init(rng);
    p.actor.init(rng);
    p.critic.init(rng);
    return p;
}

namespace {

template <class Params, class F>
void visit_policy(Params& p, F&& f) {
    auto lin = [&](const std::string& name, auto& l) {
        f("policy." + name + ".weight", l.weight);
        f("policy." + name + ".bias", l.bias);
    };
    lin("task.fc1", p.task_mlp.fc1);
    lin("task.fc2", p.task_mlp.fc2);
    lin("query_proj", p.query_proj);
    lin("attn.q", p.wq);
    lin("attn.k", p.wk);
    lin("attn.v", p.wv);
    lin("attn.o", p.wo);
    for (std::size_t i = 0; i < p.shared.size(); ++i) lin("shared." + std::to_string(i), p.shared[i]);
    lin("actor.fc1", p.actor.fc1);
    lin("actor.fc2", p.actor.fc2);
    lin("critic.fc1", p.critic.fc1);
    lin("critic.fc2", p.critic.fc2);
}

}  // namespace

NamedTensors PolicyParams::tensors() const {
    NamedTensors out;
    visit_policy(*this, [&](const std::string& name, const nn::Tensor& t) {
        nn::Tensor copy(t.shape);
        copy.value = t.value;
        out.emplace_back(name, std::move(copy));
    });
    return out;
}

bool PolicyParams::load(const NamedTensors& tensors) {
    std::map<std::string, const nn::Tensor*> by_name;
    for (const auto& [name, t] : tensors) by_name[name] = &t;
    bool complete = true;
    visit_policy(*this, [&](const std::string& name, nn::Tensor& t) {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            complete = false;
            return;
        }
        if (it->second->shape != t.shape) throw Error(ErrorCode::ShapeMismatch, "shape mismatch for " + name);
        t.value = it->second->value;
    });
    return complete;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

PolicyOutput policy_forward(const PolicyParams& params, const RowMat& emb, const TaskInputs& task) {
    const auto& cfg = params.cfg;
    const auto d = Eigen::Index(cfg.d_model);
    const auto nq = Eigen::Index(cfg.n_queries);
    const auto heads = Eigen::Index(cfg.n_heads);
    const Eigen::Index hd = d / heads;
    if (emb.cols() != d || emb.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "patch embeddings have wrong shape");
    if (!emb.allFinite()) throw Error(ErrorCode::NonFiniteInput, "non-finite patch embeddings");
    const auto feats = task_features(task, cfg.physics);
    if (!std::all_of(feats.begin(), feats.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorCode::NonFiniteInput, "non-finite task inputs");
    }
    const Eigen::Index np = emb.rows();

    RowMat task_row(1, Eigen::Index(kTaskFeatures));
    for (std::size_t i = 0; i < kTaskFeatures; ++i) task_row(0, Eigen::Index(i)) = feats[i];
    const RowMat task_feat = params.task_mlp.forward(task_row);
    const RowMat query_flat = params.query_proj.forward(task_feat);
    const RowMat queries = Eigen::Map<const RowMat>(query_flat.data(), nq, d);

    const RowMat q = params.wq.forward(queries);
    const RowMat k = params.wk.forward(emb);
    const RowMat v = params.wv.forward(emb);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    PolicyOutput out;
    out.attention.heads = std::size_t(heads);
    out.attention.queries = std::size_t(nq);
    out.attention.patches = std::size_t(np);
    out.attention.values.resize(std::size_t(heads * nq * np));
    RowMat mixed(nq, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
        RowMat p = scale * (q.middleCols(h * hd, hd) * k.middleCols(h * hd, hd).transpose());
        nn::softmax_rows(p);
        mixed.middleCols(h * hd, hd).noalias() = p * v.middleCols(h * hd, hd);
        for (Eigen::Index qi = 0; qi < nq; ++qi) {
            for (Eigen::Index pi = 0; pi < np; ++pi) {
                out.attention.values[std::size_t((h * nq + qi) * np + pi)] = p(qi, pi);
            }
        }
    }
    const RowMat attended = params.wo.forward(mixed);

    RowMat x(1, nq * d + Eigen::Index(kTaskFeatures));
    x.leftCols(nq * d) = Eigen::Map<const RowMat>(attended.data(), 1, nq * d);
    x.rightCols(Eigen::Index(kTaskFeatures)) = task_row;
    for (const auto& layer : params.shared) x = nn::gelu(layer.forward(x));

    const RowMat raw = params.actor.forward(x);
    for (std::size_t i = 0; i < kActionDim; ++i) {
        const double a = raw(0, Eigen::Index(i));
        out.action[i] = i < 6 ? a : softplus(a);
    }
    for (int j = 0; j < 3; ++j) {
        out.command.delta_translation[j] = out.action[std::size_t(j)];
        out.command.delta_rotation[j] = out.action[std::size_t(3 + j)];
    }
    for (std::size_t j = 0; j < kJoints; ++j) {
        out.command.kp[j] = out.action[6 + j];
        out.command.damping[j] = out.action[6 + kJoints + j];
    }
    out.value = params.critic.forward(x)(0, 0);
    return out;
}

std::vector<double> attention_map(const AttentionTensor& a) {
    std::vector<double> sums(a.patches, 0.0);
    for (std::size_t h = 0; h < a.heads; ++h) {
        for (std::size_t q = 0; q < a.queries; ++q) {
            for (std::size_t p = 0; p < a.patches; ++p) sums[p] += a.at(h, q, p);
        }
    }
    if (sums.empty()) return sums;
    const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
    const double mn = *lo, mx = *hi;
    for (auto& s : sums) s = mx > mn ? (s - mn) / (mx - mn) : 0.5;
    return sums;
}

}  // namespace corn
