#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "corn/rng.hpp"

// Minimal dense building blocks with explicit backward passes. Activations
// are row-major matrices with one token per row.
namespace corn::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<RowVec>;
using ConstVecMap = Eigen::Map<const RowVec>;

// Buffers start on a SIMD boundary. Eigen peels unaligned heads off its
// vectorized loops, so an arbitrary heap address would change the summation
// order and make results depend on where the allocator put the tensor.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Shape plus values, with a same-shape gradient buffer.
struct Tensor {
    std::vector<std::size_t> shape;
    Buffer value;
    Buffer grad;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);

    std::size_t size() const { return value.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    void zero_grad();
    bool all_finite() const;
    bool grad_finite() const;

    MatMap mat() { return {value.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
    ConstMatMap mat() const { return {value.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
    MatMap grad_mat() { return {grad.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
    VecMap vec() { return {value.data(), Eigen::Index(size())}; }
    ConstVecMap vec() const { return {value.data(), Eigen::Index(size())}; }
    VecMap grad_vec() { return {grad.data(), Eigen::Index(size())}; }
};

// y = x W^T + b with W stored (out, in).
struct Linear {
    Tensor weight;
    Tensor bias;

    Linear() = default;
    Linear(std::size_t in, std::size_t out);

    std::size_t in_features() const { return weight.cols(); }
    std::size_t out_features() const { return weight.rows(); }

    // U(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
    void init(Rng& rng);
    RowMat forward(const RowMat& x) const;
    // Accumulates parameter gradients and returns dL/dx.
    RowMat backward(const RowMat& x, const RowMat& dy);
};

struct LayerNorm {
    static constexpr double kEps = 1e-5;
    Tensor gamma;
    Tensor beta;

    LayerNorm() = default;
    explicit LayerNorm(std::size_t dim);

    struct Cache {
        RowMat normalized;
        Eigen::VectorXd inv_std;
    };
    RowMat forward(const RowMat& x, Cache& cache) const;
    RowMat backward(const Cache& cache, const RowMat& dy);
};

// Exact (erf) GELU.
RowMat gelu(const RowMat& x);
RowMat gelu_backward(const RowMat& x, const RowMat& dy);

// Row-wise softmax, max-shifted.
void softmax_rows(RowMat& m);

// Two-layer perceptron: Linear -> GELU -> Linear.
struct Mlp2 {
    Linear fc1;
    Linear fc2;

    Mlp2() = default;
    Mlp2(std::size_t in, std::size_t hidden, std::size_t out) : fc1(in, hidden), fc2(hidden, out) {}

    void init(Rng& rng) {
        fc1.init(rng);
        fc2.init(rng);
    }

    struct Cache {
        RowMat input;
        RowMat pre;
        RowMat act;
    };
    RowMat forward(const RowMat& x, Cache& cache) const;
    RowMat forward(const RowMat& x) const;
    RowMat backward(const Cache& cache, const RowMat& dy);
};

// Multi-head scaled dot-product self-attention over groups of `tokens`
// consecutive rows (one group per sample).
struct SelfAttention {
    std::size_t n_heads = 1;
    Linear qkv;
    Linear proj;

    SelfAttention() = default;
    SelfAttention(std::size_t dim, std::size_t heads) : n_heads(heads), qkv(dim, 3 * dim), proj(dim, dim) {}

    void init(Rng& rng) {
        qkv.init(rng);
        proj.init(rng);
    }

    struct Cache {
        RowMat input;
        RowMat qkv;
        std::vector<RowMat> probs;  // (sample, head) -> tokens x tokens
        RowMat mixed;
    };
    RowMat forward(const RowMat& x, std::size_t tokens, Cache& cache) const;
    RowMat backward(const Cache& cache, std::size_t tokens, const RowMat& dy);
};

}  // namespace corn::nn
