#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "corn/encoder.hpp"

namespace corn {

struct TrainConfig {
    std::size_t epochs = 10;
    double lr = 1e-3;
    std::size_t batch_size = 32;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
    // Re-evaluate the training split after each epoch instead of reporting
    // the running minibatch metrics.
    bool eval_train = false;

    void validate() const;
};

// Adam with decoupled weight decay; decay applies to matrices only.
class AdamW {
public:
    AdamW(const EncoderParams& params, const TrainConfig& cfg);
    void step(EncoderParams& params);

private:
    TrainConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

struct Metrics {
    double loss = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;  // 0 when nothing is predicted positive
    double recall = 0.0;     // 0 when there are no positives
    std::size_t n_patches = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean over minibatches
    Metrics train;            // running minibatch metrics, or end-of-epoch with eval_train
    Metrics validation;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
};

std::vector<EncoderSample> make_samples(std::span<const ContactRecord> records, const PatchConfig& cfg);

Metrics evaluate(const EncoderParams& params, std::span<const EncoderSample> samples,
                 std::size_t batch_size = 64);

using EpochCallback = std::function<void(const EpochStats&)>;

// First (1 - val_fraction) of the samples train, the rest validate.
// Deterministic given cfg.seed. Throws EmptyDataset, Divergence,
// NonFiniteGradient.
TrainReport train(EncoderParams& params, std::span<const EncoderSample> samples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace corn
