#pragma once

// Fully connected ReLU network with a flat parameter vector, and Adam.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ranslice::dqn {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    void resize(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        data.resize(r * c);
    }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

enum class Backend {
    kParallel,
    kReference,
};

// Layer l maps dims[l] -> dims[l+1]; ReLU on every layer but the last.
// Parameters are laid out per layer as W ([in][out]) followed by b.
class Mlp {
public:
    // Zero-initialised. Throws ShapeError for fewer than two dims or a zero dim.
    explicit Mlp(std::vector<std::size_t> dims);

    // Uniform(-sqrt(6/fan_in), sqrt(6/fan_in)) weights and zero biases.
    static Mlp he_uniform(std::vector<std::size_t> dims, std::uint64_t seed);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t input_dim() const { return dims_.front(); }
    std::size_t output_dim() const { return dims_.back(); }
    std::size_t num_layers() const { return dims_.size() - 1; }
    std::size_t param_count() const { return params_.size(); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> weights(std::size_t layer);
    std::span<const double> weights(std::size_t layer) const;
    std::span<double> bias(std::size_t layer);
    std::span<const double> bias(std::size_t layer) const;

    // Activations kept for backward(); reuse one across calls to avoid
    // reallocating.
    struct Cache {
        std::vector<Matrix> acts;  // acts[0] = input, acts[l+1] = layer l output
        std::vector<Matrix> grads;  // scratch for backward
    };

    // Throws ShapeError when x.cols != input_dim().
    Matrix forward(const Matrix& x, Backend backend = Backend::kParallel) const;
    const Matrix& forward(const Matrix& x, Cache& cache, Backend backend = Backend::kParallel) const;
    std::vector<double> forward_one(std::span<const double> x, Backend backend = Backend::kParallel) const;

    // Gradient of sum(d_out * output) with respect to every parameter, written
    // (not added) into `grads`. `cache` must hold the matching forward().
    void backward(Cache& cache, const Matrix& d_out, std::span<double> grads,
                  Backend backend = Backend::kParallel) const;

    bool all_finite() const;

    bool operator==(const Mlp&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> offsets_;  // start of W for each layer
    std::vector<double> params_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Advances state.t and applies one step. Throws ShapeError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg,
               Backend backend = Backend::kParallel);

}  // namespace ranslice::dqn
