#include "corn/train.hpp"

#include <cmath>
#include <numeric>

#include "corn/error.hpp"

namespace corn {

void TrainConfig::validate() const {
    if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch size must be positive");
    if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidConfig, "lr > 0, weight_decay >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "adam betas in [0,1), eps > 0");
    }
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw Error(ErrorCode::InvalidConfig, "val_fraction in [0,1)");
}

AdamW::AdamW(const EncoderParams& params, const TrainConfig& cfg) : cfg_(cfg) {
    params.for_each([&](const std::string&, const nn::Tensor& t) {
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    });
}

void AdamW::step(EncoderParams& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    params.for_each([&](const std::string&, nn::Tensor& t) {
        auto& m = m_[k];
        auto& v = v_[k];
        ++k;
        const double decay = t.shape.size() >= 2 ? cfg_.lr * cfg_.weight_decay : 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double g = t.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            t.value[i] -= decay * t.value[i] + cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    });
}

std::vector<EncoderSample> make_samples(std::span<const ContactRecord> records, const PatchConfig& cfg) {
    std::vector<EncoderSample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(make_sample(r, cfg));
    return out;
}

namespace {

struct Counts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double loss_sum = 0.0;

    void add(std::span<const double> logits, std::span<const std::uint8_t> labels, double mean_loss) {
        loss_sum += mean_loss * static_cast<double>(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const bool pred = logits[i] > 0.0;
            const bool truth = labels[i] != 0;
            tp += pred && truth;
            fp += pred && !truth;
            tn += !pred && !truth;
            fn += !pred && truth;
        }
    }

    Metrics metrics() const {
        Metrics m;
        m.n_patches = tp + fp + tn + fn;
        if (m.n_patches == 0) return m;
        m.loss = loss_sum / static_cast<double>(m.n_patches);
        m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(m.n_patches);
        m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        return m;
    }
};

}  // namespace

Metrics evaluate(const EncoderParams& params, std::span<const EncoderSample> samples, std::size_t batch_size) {
    Counts counts;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) idx.push_back(i);
        const EncoderBatch batch = make_batch(samples, idx, params.cfg);
        const LossResult r = loss_only(params, batch);
        counts.add(r.logits, batch.labels, r.loss);
    }
    return counts.metrics();
}

TrainReport train(EncoderParams& params, std::span<const EncoderSample> samples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
    TrainReport report;
    report.n_validation = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(samples.size())));
    report.n_train = samples.size() - report.n_validation;
    if (report.n_train == 0) throw Error(ErrorCode::EmptyDataset, "validation split leaves no training samples");
    const auto train_set = samples.subspan(0, report.n_train);
    const auto val_set = samples.subspan(report.n_train);

    AdamW opt(params, cfg);
    Rng rng(derive_seed(cfg.seed, 0x7472616eULL));
    std::vector<std::size_t> order(report.n_train);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        Counts counts;
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const EncoderBatch batch = make_batch(train_set, idx, params.cfg);
            params.zero_grad();
            const LossResult r = loss_and_backward(params, batch);
            if (!std::isfinite(r.loss)) {
                throw Error(ErrorCode::Divergence, "non-finite loss at epoch " + std::to_string(epoch));
            }
            bool finite = true;
            params.for_each([&](const std::string&, const nn::Tensor& t) { finite = finite && t.grad_finite(); });
            if (!finite) throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient at epoch " + std::to_string(epoch));
            opt.step(params);
            counts.add(r.logits, batch.labels, r.loss);
            loss_sum += r.loss;
            ++n_batches;
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(n_batches);
        stats.train = cfg.eval_train ? evaluate(params, train_set) : counts.metrics();
        if (!val_set.empty()) stats.validation = evaluate(params, val_set);
        report.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return report;
}

}  // namespace corn
