#include "ranslice/dqn/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ranslice/dqn/kernels.hpp"
#include "ranslice/errors.hpp"

namespace ranslice::dqn {

namespace k = kernels;

Mlp::Mlp(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ShapeError("a network needs at least an input and an output dimension");
    if (std::find(dims_.begin(), dims_.end(), std::size_t{0}) != dims_.end())
        throw ShapeError("layer dimensions must be positive");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        offsets_.push_back(total);
        total += dims_[l] * dims_[l + 1] + dims_[l + 1];
    }
    params_.assign(total, 0.0);
}

Mlp Mlp::he_uniform(std::vector<std::size_t> dims, std::uint64_t seed) {
    Mlp net(std::move(dims));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(net.dims_[l]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : net.weights(l)) w = dist(rng);
    }
    return net;
}

std::span<double> Mlp::weights(std::size_t l) {
    return {params_.data() + offsets_.at(l), dims_[l] * dims_[l + 1]};
}
std::span<const double> Mlp::weights(std::size_t l) const {
    return {params_.data() + offsets_.at(l), dims_[l] * dims_[l + 1]};
}
std::span<double> Mlp::bias(std::size_t l) {
    return {params_.data() + offsets_.at(l) + dims_[l] * dims_[l + 1], dims_[l + 1]};
}
std::span<const double> Mlp::bias(std::size_t l) const {
    return {params_.data() + offsets_.at(l) + dims_[l] * dims_[l + 1], dims_[l + 1]};
}

const Matrix& Mlp::forward(const Matrix& x, Cache& cache, Backend backend) const {
    if (x.cols != input_dim())
        throw ShapeError("input has " + std::to_string(x.cols) + " features, network expects " +
                         std::to_string(input_dim()));
    const std::size_t L = num_layers();
    cache.acts.resize(L + 1);
    cache.acts[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix& in = cache.acts[l];
        Matrix& out = cache.acts[l + 1];
        out.resize(in.rows, dims_[l + 1]);
        const bool relu = l + 1 < L;
        const auto fwd = backend == Backend::kParallel ? &k::dense_forward : &k::reference::dense_forward;
        fwd(in.data.data(), in.rows, dims_[l], weights(l).data(), bias(l).data(), dims_[l + 1], out.data.data(),
            relu);
    }
    return cache.acts[L];
}

Matrix Mlp::forward(const Matrix& x, Backend backend) const {
    Cache cache;
    forward(x, cache, backend);
    return std::move(cache.acts.back());
}

std::vector<double> Mlp::forward_one(std::span<const double> x, Backend backend) const {
    Matrix m(1, x.size());
    std::copy(x.begin(), x.end(), m.data.begin());
    return forward(m, backend).data;
}

void Mlp::backward(Cache& cache, const Matrix& d_out, std::span<double> grads, Backend backend) const {
    const std::size_t L = num_layers();
    if (cache.acts.size() != L + 1) throw ShapeError("backward() without a matching forward()");
    const std::size_t n = cache.acts[0].rows;
    if (d_out.rows != n || d_out.cols != output_dim()) throw ShapeError("output gradient has the wrong shape");
    if (grads.size() != param_count()) throw ShapeError("gradient buffer has the wrong size");

    const auto bwd = backend == Backend::kParallel ? &k::dense_backward : &k::reference::dense_backward;
    const auto relu_bwd = backend == Backend::kParallel ? &k::relu_backward : &k::reference::relu_backward;

    cache.grads.resize(L + 1);
    cache.grads[L] = d_out;
    for (std::size_t l = L; l-- > 0;) {
        Matrix& dy = cache.grads[l + 1];
        if (l + 1 < L) relu_bwd(cache.acts[l + 1].data.data(), dy.data.data(), dy.data.size());
        double* dx = nullptr;
        if (l > 0) {
            cache.grads[l].resize(n, dims_[l]);
            dx = cache.grads[l].data.data();
        }
        double* dW = grads.data() + offsets_[l];
        double* db = dW + dims_[l] * dims_[l + 1];
        bwd(cache.acts[l].data.data(), dy.data.data(), n, dims_[l], dims_[l + 1], weights(l).data(), dW, db, dx);
    }
}

bool Mlp::all_finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg,
               Backend backend) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeError("Adam buffers do not match the parameter count");
    ++state.t;
    const auto upd = backend == Backend::kParallel ? &k::adam_update : &k::reference::adam_update;
    upd(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), cfg.lr, cfg.beta1, cfg.beta2,
        cfg.eps, state.t);
}

}  // namespace ranslice::dqn
