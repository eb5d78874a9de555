#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corn/contactgen.hpp"
#include "corn/geom.hpp"
#include "corn/nn.hpp"
#include "corn/patches.hpp"

namespace corn {

struct EncoderConfig {
    std::size_t d_model = 128;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t ffn_dim = 256;
    std::size_t hand_dim = 9;
    std::size_t decoder_hidden = 64;
    PatchConfig patch;
    // Coordinates are multiplied by this before tokenization (1/m).
    double input_scale = 10.0;

    std::size_t patch_features() const { return 3 * patch.patch_size; }
    std::size_t tokens() const { return patch.n_patches + 1; }
    void validate() const;
};

// Hand pose as seen by the encoder: position plus 6D orientation.
struct HandState {
    Vec3 position = Vec3::Zero();
    Rot6D orientation;

    std::array<double, 9> features() const;
};

struct EncoderBlock {
    nn::LayerNorm ln1;
    nn::SelfAttention attn;
    nn::LayerNorm ln2;
    nn::Mlp2 ffn;
};

struct EncoderParams {
    EncoderConfig cfg;
    nn::Mlp2 tokenizer;  // flattened sorted patch -> token
    nn::Mlp2 posemb;     // patch center -> positional embedding
    nn::Mlp2 hand;       // hand state -> hand token
    std::vector<EncoderBlock> blocks;
    nn::LayerNorm ln_final;
    nn::Mlp2 decoder;  // token -> contact logit

    EncoderParams() = default;
    explicit EncoderParams(const EncoderConfig& cfg);
    static EncoderParams initialized(const EncoderConfig& cfg, std::uint64_t seed);

    // Visits every learnable tensor with its stable name.
    void for_each(const std::function<void(const std::string&, nn::Tensor&)>& f);
    void for_each(const std::function<void(const std::string&, const nn::Tensor&)>& f) const;
    void zero_grad();
    std::size_t parameter_count() const;
};

// One training/evaluation example in the encoder's normalized frame.
struct EncoderSample {
    std::vector<double> patches;  // n_patches * patch_size * 3, sorted within patch
    std::vector<double> centers;  // n_patches * 3
    std::array<double, 9> hand{};
    std::vector<std::uint8_t> labels;  // per patch
};

// Centers the cloud on its centroid, shifts the hand position into the same
// frame, builds patches and patch labels.
EncoderSample make_sample(const ContactRecord& record, const PatchConfig& cfg);
EncoderSample make_sample(const PatchSet& patches, const HandState& hand);

struct EncoderBatch {
    std::size_t size = 0;
    nn::RowMat patches;  // size*n_patches x patch_features (already scaled)
    nn::RowMat centers;  // size*n_patches x 3 (already scaled)
    nn::RowMat hand;     // size x 9 (position scaled)
    std::vector<std::uint8_t> labels;
};

EncoderBatch make_batch(std::span<const EncoderSample> samples, std::span<const std::size_t> indices,
                        const EncoderConfig& cfg);

struct EncoderCache {
    nn::Mlp2::Cache tokenizer, posemb, hand;
    struct Block {
        nn::LayerNorm::Cache ln1, ln2;
        nn::SelfAttention::Cache attn;
        nn::Mlp2::Cache ffn;
    };
    std::vector<Block> blocks;
    nn::LayerNorm::Cache ln_final;
    nn::Mlp2::Cache decoder;
};

struct EncoderOutput {
    nn::RowMat patch_embeddings;  // size*n_patches x d_model
    nn::RowMat hand_embeddings;   // size x d_model
};

EncoderOutput encoder_forward(const EncoderParams& params, const EncoderBatch& batch, EncoderCache* cache = nullptr);
// Patchwise logits (rows x 1) from patch embeddings.
nn::RowMat decoder_forward(const EncoderParams& params, const nn::RowMat& patch_embeddings,
                           nn::Mlp2::Cache* cache = nullptr);

// Single-cloud entry points.
std::pair<nn::RowMat, nn::RowVec> encode(const EncoderParams& params, const PatchSet& patches,
                                          const HandState& hand);
std::vector<double> decode_contact(const EncoderParams& params, const nn::RowMat& patch_embeddings);

// Mean of max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_loss(std::span<const double> logits, std::span<const std::uint8_t> labels);

struct LossResult {
    double loss = 0.0;
    std::vector<double> logits;
};

// Forward, mean BCE and backward; gradients accumulate into params.
LossResult loss_and_backward(EncoderParams& params, const EncoderBatch& batch);
LossResult loss_only(const EncoderParams& params, const EncoderBatch& batch);

}  // namespace corn
