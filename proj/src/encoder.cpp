#include "corn/encoder.hpp"

#include <cmath>

#include "corn/error.hpp"

namespace corn {

using nn::RowMat;

void EncoderConfig::validate() const {
    patch.validate();
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw Error(ErrorCode::InvalidConfig, "d_model must be a positive multiple of n_heads");
    }
    if (n_layers == 0 || ffn_dim == 0 || decoder_hidden == 0) {
        throw Error(ErrorCode::InvalidConfig, "layer sizes must be positive");
    }
    if (hand_dim != 9) throw Error(ErrorCode::InvalidConfig, "hand state is position + 6D rotation (9)");
    if (!(input_scale > 0.0) || !std::isfinite(input_scale)) {
        throw Error(ErrorCode::InvalidConfig, "input_scale must be positive");
    }
}

std::array<double, 9> HandState::features() const {
    return {position.x(), position.y(), position.z(), orientation.v[0], orientation.v[1],
            orientation.v[2], orientation.v[3], orientation.v[4], orientation.v[5]};
}

EncoderParams::EncoderParams(const EncoderConfig& c)
    : cfg(c),
      tokenizer(c.patch_features(), c.d_model, c.d_model),
      posemb(3, c.d_model, c.d_model),
      hand(c.hand_dim, c.d_model, c.d_model),
      ln_final(c.d_model),
      decoder(c.d_model, c.decoder_hidden, 1) {
    c.validate();
    for (std::size_t i = 0; i < c.n_layers; ++i) {
        blocks.push_back({nn::LayerNorm(c.d_model), nn::SelfAttention(c.d_model, c.n_heads),
                          nn::LayerNorm(c.d_model), nn::Mlp2(c.d_model, c.ffn_dim, c.d_model)});
    }
}

EncoderParams EncoderParams::initialized(const EncoderConfig& cfg, std::uint64_t seed) {
    EncoderParams p(cfg);
    Rng rng(seed);
    p.tokenizer.init(rng);
    p.posemb.init(rng);
    p.hand.init(rng);
    for (auto& b : p.blocks) {
        b.attn.init(rng);
        b.ffn.init(rng);
    }
    p.decoder.init(rng);
    return p;
}

namespace {

template <class Params, class F>
void visit_params(Params& p, F&& f) {
    auto mlp = [&](const std::string& prefix, auto& m) {
        f(prefix + ".fc1.weight", m.fc1.weight);
        f(prefix + ".fc1.bias", m.fc1.bias);
        f(prefix + ".fc2.weight", m.fc2.weight);
        f(prefix + ".fc2.bias", m.fc2.bias);
    };
    auto norm = [&](const std::string& prefix, auto& n) {
        f(prefix + ".gamma", n.gamma);
        f(prefix + ".beta", n.beta);
    };
    mlp("tokenizer", p.tokenizer);
    mlp("posemb", p.posemb);
    mlp("hand", p.hand);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "blocks." + std::to_string(i);
        norm(pre + ".ln1", b.ln1);
        f(pre + ".attn.qkv.weight", b.attn.qkv.weight);
        f(pre + ".attn.qkv.bias", b.attn.qkv.bias);
        f(pre + ".attn.proj.weight", b.attn.proj.weight);
        f(pre + ".attn.proj.bias", b.attn.proj.bias);
        norm(pre + ".ln2", b.ln2);
        mlp(pre + ".ffn", b.ffn);
    }
    norm("ln_final", p.ln_final);
    mlp("decoder", p.decoder);
}

}  // namespace

void EncoderParams::for_each(const std::function<void(const std::string&, nn::Tensor&)>& f) {
    visit_params(*this, f);
}

void EncoderParams::for_each(const std::function<void(const std::string&, const nn::Tensor&)>& f) const {
    visit_params(*this, f);
}

void EncoderParams::zero_grad() {
    for_each([](const std::string&, nn::Tensor& t) { t.zero_grad(); });
}

std::size_t EncoderParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const nn::Tensor& t) { n += t.size(); });
    return n;
}

// ------------------------------------------------------------------ samples

EncoderSample make_sample(const PatchSet& ps, const HandState& hand) {
    EncoderSample s;
    s.patches.reserve(ps.points.size() * 3);
    for (const auto& p : ps.points) s.patches.insert(s.patches.end(), {p.x(), p.y(), p.z()});
    for (const auto& c : ps.centers) s.centers.insert(s.centers.end(), {c.x(), c.y(), c.z()});
    s.hand = hand.features();
    s.labels.assign(ps.n_patches, 0);
    return s;
}

EncoderSample make_sample(const ContactRecord& record, const PatchConfig& cfg) {
    PointCloud cloud = record_cloud(record);
    const Vec3 centroid = cloud.centroid();
    for (auto& p : cloud.points) p -= centroid;
    const PatchSet ps = make_patches(cloud, cfg);
    const Pose grip = record.gripper_pose();
    HandState hand{grip.translation() - centroid, rot_to_6d(grip.rotation())};
    EncoderSample s = make_sample(ps, hand);
    s.labels = patch_labels(record, ps);
    return s;
}

EncoderBatch make_batch(std::span<const EncoderSample> samples, std::span<const std::size_t> indices,
                        const EncoderConfig& cfg) {
    const std::size_t np = cfg.patch.n_patches, pf = cfg.patch_features();
    EncoderBatch b;
    b.size = indices.size();
    b.patches.resize(Eigen::Index(b.size * np), Eigen::Index(pf));
    b.centers.resize(Eigen::Index(b.size * np), 3);
    b.hand.resize(Eigen::Index(b.size), 9);
    b.labels.reserve(b.size * np);
    const double scale = cfg.input_scale;
    for (std::size_t r = 0; r < b.size; ++r) {
        const EncoderSample& s = samples[indices[r]];
        if (s.patches.size() != np * pf || s.centers.size() != np * 3) {
            throw Error(ErrorCode::ShapeMismatch, "sample does not match encoder patch configuration");
        }
        for (std::size_t p = 0; p < np; ++p) {
            const auto row = Eigen::Index(r * np + p);
            for (std::size_t j = 0; j < pf; ++j) b.patches(row, Eigen::Index(j)) = scale * s.patches[p * pf + j];
            for (int k = 0; k < 3; ++k) b.centers(row, k) = scale * s.centers[p * 3 + std::size_t(k)];
        }
        for (int k = 0; k < 9; ++k) b.hand(Eigen::Index(r), k) = (k < 3 ? scale : 1.0) * s.hand[std::size_t(k)];
        if (s.labels.size() == np) {
            b.labels.insert(b.labels.end(), s.labels.begin(), s.labels.end());
        } else {
            b.labels.insert(b.labels.end(), np, 0);
        }
    }
    return b;
}

// ------------------------------------------------------------------ forward

EncoderOutput encoder_forward(const EncoderParams& params, const EncoderBatch& batch, EncoderCache* cache) {
    const auto& cfg = params.cfg;
    const auto np = Eigen::Index(cfg.patch.n_patches);
    const auto tokens = Eigen::Index(cfg.tokens());
    const auto d = Eigen::Index(cfg.d_model);
    const auto bsz = Eigen::Index(batch.size);
    if (batch.patches.rows() != bsz * np || batch.patches.cols() != Eigen::Index(cfg.patch_features()) ||
        batch.centers.rows() != bsz * np || batch.centers.cols() != 3 || batch.hand.rows() != bsz ||
        batch.hand.cols() != Eigen::Index(cfg.hand_dim)) {
        throw Error(ErrorCode::ShapeMismatch, "encoder batch shape does not match config");
    }
    EncoderCache local;
    EncoderCache& c = cache ? *cache : local;

    const RowMat patch_tokens = params.tokenizer.forward(batch.patches, c.tokenizer);
    const RowMat pos = params.posemb.forward(batch.centers, c.posemb);
    const RowMat hand_tokens = params.hand.forward(batch.hand, c.hand);

    RowMat x(bsz * tokens, d);
    for (Eigen::Index s = 0; s < bsz; ++s) {
        x.middleRows(s * tokens, np) = patch_tokens.middleRows(s * np, np) + pos.middleRows(s * np, np);
        x.row(s * tokens + np) = hand_tokens.row(s);
    }
    c.blocks.resize(params.blocks.size());
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        const auto& blk = params.blocks[i];
        auto& bc = c.blocks[i];
        x += blk.attn.forward(blk.ln1.forward(x, bc.ln1), std::size_t(tokens), bc.attn);
        x += blk.ffn.forward(blk.ln2.forward(x, bc.ln2), bc.ffn);
    }
    const RowMat y = params.ln_final.forward(x, c.ln_final);

    EncoderOutput out;
    out.patch_embeddings.resize(bsz * np, d);
    out.hand_embeddings.resize(bsz, d);
    for (Eigen::Index s = 0; s < bsz; ++s) {
        out.patch_embeddings.middleRows(s * np, np) = y.middleRows(s * tokens, np);
        out.hand_embeddings.row(s) = y.row(s * tokens + np);
    }
    return out;
}

RowMat decoder_forward(const EncoderParams& params, const RowMat& emb, nn::Mlp2::Cache* cache) {
    if (emb.cols() != Eigen::Index(params.cfg.d_model)) {
        throw Error(ErrorCode::ShapeMismatch, "patch embeddings have the wrong width");
    }
    return cache ? params.decoder.forward(emb, *cache) : params.decoder.forward(emb);
}

std::pair<RowMat, nn::RowVec> encode(const EncoderParams& params, const PatchSet& patches, const HandState& hand) {
    const auto& cfg = params.cfg.patch;
    if (patches.n_patches != cfg.n_patches || patches.patch_size != cfg.patch_size ||
        patches.points.size() != cfg.n_patches * cfg.patch_size || patches.centers.size() != cfg.n_patches) {
        throw Error(ErrorCode::ShapeMismatch, "patch set does not match encoder configuration");
    }
    const auto finite = [](const Vec3& v) { return v.allFinite(); };
    if (!std::all_of(patches.points.begin(), patches.points.end(), finite) ||
        !std::all_of(patches.centers.begin(), patches.centers.end(), finite) || !hand.position.allFinite() ||
        !std::all_of(hand.orientation.v.begin(), hand.orientation.v.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorCode::NonFiniteInput, "encoder input contains non-finite values");
    }
    const EncoderSample s = make_sample(patches, hand);
    const std::size_t idx = 0;
    const EncoderBatch batch = make_batch(std::span(&s, 1), std::span(&idx, 1), params.cfg);
    EncoderOutput out = encoder_forward(params, batch);
    return {std::move(out.patch_embeddings), out.hand_embeddings.row(0)};
}

std::vector<double> decode_contact(const EncoderParams& params, const RowMat& patch_embeddings) {
    if (patch_embeddings.rows() != Eigen::Index(params.cfg.patch.n_patches)) {
        throw Error(ErrorCode::ShapeMismatch, "expected one embedding row per patch");
    }
    const RowMat logits = decoder_forward(params, patch_embeddings);
    return {logits.data(), logits.data() + logits.size()};
}

// --------------------------------------------------------------------- loss

double bce_loss(std::span<const double> logits, std::span<const std::uint8_t> labels) {
    if (logits.size() != labels.size()) throw Error(ErrorCode::SizeMismatch, "logits and labels differ in length");
    if (logits.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double y = labels[i] ? 1.0 : 0.0;
        total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<double>(logits.size());
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

LossResult loss_only(const EncoderParams& params, const EncoderBatch& batch) {
    const EncoderOutput out = encoder_forward(params, batch);
    const RowMat logits = decoder_forward(params, out.patch_embeddings);
    LossResult r;
    r.logits.assign(logits.data(), logits.data() + logits.size());
    r.loss = bce_loss(r.logits, batch.labels);
    return r;
}

LossResult loss_and_backward(EncoderParams& params, const EncoderBatch& batch) {
    const auto& cfg = params.cfg;
    const auto np = Eigen::Index(cfg.patch.n_patches);
    const auto tokens = Eigen::Index(cfg.tokens());
    const auto d = Eigen::Index(cfg.d_model);
    const auto bsz = Eigen::Index(batch.size);

    EncoderCache c;
    const EncoderOutput out = encoder_forward(params, batch, &c);
    const RowMat logits = decoder_forward(params, out.patch_embeddings, &c.decoder);

    LossResult r;
    r.logits.assign(logits.data(), logits.data() + logits.size());
    r.loss = bce_loss(r.logits, batch.labels);

    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    RowMat dlogits(logits.rows(), 1);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        dlogits(i, 0) = (sigmoid(logits(i, 0)) - (batch.labels[std::size_t(i)] ? 1.0 : 0.0)) * inv_n;
    }
    const RowMat demb = params.decoder.backward(c.decoder, dlogits);

    RowMat dy = RowMat::Zero(bsz * tokens, d);
    for (Eigen::Index s = 0; s < bsz; ++s) dy.middleRows(s * tokens, np) = demb.middleRows(s * np, np);
    RowMat dx = params.ln_final.backward(c.ln_final, dy);
    for (std::size_t i = params.blocks.size(); i-- > 0;) {
        auto& blk = params.blocks[i];
        auto& bc = c.blocks[i];
        dx += blk.ln2.backward(bc.ln2, blk.ffn.backward(bc.ffn, dx));
        dx += blk.ln1.backward(bc.ln1, blk.attn.backward(bc.attn, std::size_t(tokens), dx));
    }
    RowMat dpatch(bsz * np, d), dhand(bsz, d);
    for (Eigen::Index s = 0; s < bsz; ++s) {
        dpatch.middleRows(s * np, np) = dx.middleRows(s * tokens, np);
        dhand.row(s) = dx.row(s * tokens + np);
    }
    params.tokenizer.backward(c.tokenizer, dpatch);
    params.posemb.backward(c.posemb, dpatch);
    params.hand.backward(c.hand, dhand);
    return r;
}

}  // namespace corn
