#include "corn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace corn::nn {

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    value.assign(n, 0.0);
    grad.assign(n, 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

bool Tensor::all_finite() const {
    return std::all_of(value.begin(), value.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::grad_finite() const {
    return std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); });
}

Linear::Linear(std::size_t in, std::size_t out) : weight({out, in}), bias({out}) {}

void Linear::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
    for (auto& w : weight.value) w = rng.uniform(-bound, bound);
    std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

RowMat Linear::forward(const RowMat& x) const {
    RowMat y = x * weight.mat().transpose();
    y.rowwise() += bias.vec();
    return y;
}

RowMat Linear::backward(const RowMat& x, const RowMat& dy) {
    weight.grad_mat().noalias() += dy.transpose() * x;
    bias.grad_vec() += dy.colwise().sum();
    return dy * weight.mat();
}

LayerNorm::LayerNorm(std::size_t dim) : gamma({dim}), beta({dim}) {
    std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
}

RowMat LayerNorm::forward(const RowMat& x, Cache& cache) const {
    const auto n = static_cast<double>(x.cols());
    cache.normalized.resize(x.rows(), x.cols());
    cache.inv_std.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).sum() / n;
        const auto centered = (x.row(r).array() - mean).eval();
        const double var = centered.square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + kEps);
        cache.inv_std[r] = inv;
        cache.normalized.row(r) = centered * inv;
    }
    RowMat y = cache.normalized.array().rowwise() * gamma.vec().array();
    y.rowwise() += beta.vec();
    return y;
}

RowMat LayerNorm::backward(const Cache& cache, const RowMat& dy) {
    const auto n = static_cast<double>(dy.cols());
    gamma.grad_vec() += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
    beta.grad_vec() += dy.colwise().sum();
    const RowMat dxhat = dy.array().rowwise() * gamma.vec().array();
    RowMat dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double s1 = dxhat.row(r).sum();
        const double s2 = dxhat.row(r).dot(cache.normalized.row(r));
        dx.row(r) = (cache.inv_std[r] / n) *
                    (n * dxhat.row(r).array() - s1 - cache.normalized.row(r).array() * s2).matrix();
    }
    return dx;
}

RowMat gelu(const RowMat& x) {
    return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); });
}

RowMat gelu_backward(const RowMat& x, const RowMat& dy) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const RowMat d = x.unaryExpr([&](double v) {
        return 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    });
    return dy.cwiseProduct(d);
}

void softmax_rows(RowMat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp();
        m.row(r) /= m.row(r).sum();
    }
}

RowMat Mlp2::forward(const RowMat& x, Cache& cache) const {
    cache.input = x;
    cache.pre = fc1.forward(x);
    cache.act = gelu(cache.pre);
    return fc2.forward(cache.act);
}

RowMat Mlp2::forward(const RowMat& x) const { return fc2.forward(gelu(fc1.forward(x))); }

RowMat Mlp2::backward(const Cache& cache, const RowMat& dy) {
    const RowMat dact = fc2.backward(cache.act, dy);
    return fc1.backward(cache.input, gelu_backward(cache.pre, dact));
}

RowMat SelfAttention::forward(const RowMat& x, std::size_t tokens, Cache& cache) const {
    const auto dim = static_cast<Eigen::Index>(x.cols());
    const auto t = static_cast<Eigen::Index>(tokens);
    const Eigen::Index head_dim = dim / static_cast<Eigen::Index>(n_heads);
    const Eigen::Index samples = x.rows() / t;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    cache.input = x;
    cache.qkv = qkv.forward(x);
    cache.probs.assign(static_cast<std::size_t>(samples) * n_heads, RowMat());
    cache.mixed.setZero(x.rows(), dim);
    for (Eigen::Index s = 0; s < samples; ++s) {
        for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(n_heads); ++h) {
            const auto q = cache.qkv.block(s * t, h * head_dim, t, head_dim);
            const auto k = cache.qkv.block(s * t, dim + h * head_dim, t, head_dim);
            const auto v = cache.qkv.block(s * t, 2 * dim + h * head_dim, t, head_dim);
            RowMat p = scale * (q * k.transpose());
            softmax_rows(p);
            cache.mixed.block(s * t, h * head_dim, t, head_dim).noalias() = p * v;
            cache.probs[static_cast<std::size_t>(s) * n_heads + static_cast<std::size_t>(h)] = std::move(p);
        }
    }
    return proj.forward(cache.mixed);
}

RowMat SelfAttention::backward(const Cache& cache, std::size_t tokens, const RowMat& dy) {
    const auto dim = static_cast<Eigen::Index>(cache.input.cols());
    const auto t = static_cast<Eigen::Index>(tokens);
    const Eigen::Index head_dim = dim / static_cast<Eigen::Index>(n_heads);
    const Eigen::Index samples = cache.input.rows() / t;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const RowMat dmixed = proj.backward(cache.mixed, dy);
    RowMat dqkv = RowMat::Zero(cache.qkv.rows(), cache.qkv.cols());
    for (Eigen::Index s = 0; s < samples; ++s) {
        for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(n_heads); ++h) {
            const RowMat& p = cache.probs[static_cast<std::size_t>(s) * n_heads + static_cast<std::size_t>(h)];
            const auto q = cache.qkv.block(s * t, h * head_dim, t, head_dim);
            const auto k = cache.qkv.block(s * t, dim + h * head_dim, t, head_dim);
            const auto v = cache.qkv.block(s * t, 2 * dim + h * head_dim, t, head_dim);
            const auto dout = dmixed.block(s * t, h * head_dim, t, head_dim);
            const RowMat dp = dout * v.transpose();
            dqkv.block(s * t, 2 * dim + h * head_dim, t, head_dim).noalias() = p.transpose() * dout;
            const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
            const RowMat ds = (p.array() * (dp.array().colwise() - row_dot.array())).matrix() * scale;
            dqkv.block(s * t, h * head_dim, t, head_dim).noalias() = ds * k;
            dqkv.block(s * t, dim + h * head_dim, t, head_dim).noalias() = ds.transpose() * q;
        }
    }
    return qkv.backward(cache.input, dqkv);
}

}  // namespace corn::nn
