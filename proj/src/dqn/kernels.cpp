#include "ranslice/dqn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cfloat>
#include <cstring>

namespace ranslice::dqn::kernels {

namespace {
// Output columns per work item; 64 doubles keep a W row slice in one page of L1.
constexpr std::size_t kColBlock = 64;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelMacs = 1u << 15;

// Moments of parameters that stop receiving gradient (dead ReLU units) decay
// geometrically into the subnormal range, where arithmetic is very slow.
// Below DBL_MIN they cannot move a parameter measurably, so drop them.
inline double flush_tiny(double x) { return std::fabs(x) < DBL_MIN ? 0.0 : x; }
}  // namespace

void dense_forward(const double* X, std::size_t n, std::size_t in, const double* W, const double* b,
                   std::size_t out, double* Y, bool relu) {
    const auto blocks = static_cast<long>((out + kColBlock - 1) / kColBlock);
#pragma omp parallel for schedule(static) if (n * in * out >= kParallelMacs)
    for (long blk = 0; blk < blocks; ++blk) {
        const std::size_t c0 = static_cast<std::size_t>(blk) * kColBlock;
        const std::size_t c1 = std::min(out, c0 + kColBlock);
        for (std::size_t r = 0; r < n; ++r) {
            double* __restrict y = Y + r * out;
#pragma omp simd
            for (std::size_t c = c0; c < c1; ++c) y[c] = b[c];
        }
        for (std::size_t i = 0; i < in; ++i) {
            const double* __restrict w = W + i * out;
            for (std::size_t r = 0; r < n; ++r) {
                const double x = X[r * in + i];
                if (x == 0.0) continue;
                double* __restrict y = Y + r * out;
#pragma omp simd
                for (std::size_t c = c0; c < c1; ++c) y[c] += x * w[c];
            }
        }
        if (relu) {
            for (std::size_t r = 0; r < n; ++r) {
                double* __restrict y = Y + r * out;
#pragma omp simd
                for (std::size_t c = c0; c < c1; ++c) y[c] = y[c] > 0.0 ? y[c] : 0.0;
            }
        }
    }
}

void relu_backward(const double* Y, double* dY, std::size_t count) {
#pragma omp simd
    for (std::size_t k = 0; k < count; ++k) dY[k] = Y[k] > 0.0 ? dY[k] : 0.0;
}

void dense_backward(const double* X, const double* dY, std::size_t n, std::size_t in, std::size_t out,
                    const double* W, double* dW, double* db, double* dX) {
    const bool par = n * in * out >= kParallelMacs;
#pragma omp parallel if (par)
    {
#pragma omp for schedule(static) nowait
        for (long i = 0; i < static_cast<long>(in); ++i) {
            double* __restrict dw = dW + static_cast<std::size_t>(i) * out;
            std::memset(dw, 0, out * sizeof(double));
            for (std::size_t r = 0; r < n; ++r) {
                const double x = X[r * in + static_cast<std::size_t>(i)];
                if (x == 0.0) continue;
                const double* __restrict dy = dY + r * out;
#pragma omp simd
                for (std::size_t c = 0; c < out; ++c) dw[c] += x * dy[c];
            }
        }
#pragma omp single nowait
        {
            std::memset(db, 0, out * sizeof(double));
            for (std::size_t r = 0; r < n; ++r) {
                const double* __restrict dy = dY + r * out;
#pragma omp simd
                for (std::size_t c = 0; c < out; ++c) db[c] += dy[c];
            }
        }
        if (dX) {
#pragma omp for schedule(static) collapse(2)
            for (long r = 0; r < static_cast<long>(n); ++r) {
                for (long i = 0; i < static_cast<long>(in); ++i) {
                    const double* __restrict dy = dY + static_cast<std::size_t>(r) * out;
                    const double* __restrict w = W + static_cast<std::size_t>(i) * out;
                    double s = 0.0;
#pragma omp simd reduction(+ : s)
                    for (std::size_t c = 0; c < out; ++c) s += dy[c] * w[c];
                    dX[static_cast<std::size_t>(r) * in + static_cast<std::size_t>(i)] = s;
                }
            }
        }
    }
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t count, double lr, double beta1,
                 double beta2, double eps, long t) {
    const double c1 = 1.0 / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double c2 = 1.0 / (1.0 - std::pow(beta2, static_cast<double>(t)));
#pragma omp parallel for simd schedule(static) if (count >= kParallelMacs)
    for (std::size_t k = 0; k < count; ++k) {
        const double gk = g[k];
        const double mk = flush_tiny(beta1 * m[k] + (1.0 - beta1) * gk);
        const double vk = flush_tiny(beta2 * v[k] + (1.0 - beta2) * gk * gk);
        m[k] = mk;
        v[k] = vk;
        p[k] -= lr * (mk * c1) / (std::sqrt(vk * c2) + eps);
    }
}

namespace reference {

void dense_forward(const double* X, std::size_t n, std::size_t in, const double* W, const double* b,
                   std::size_t out, double* Y, bool relu) {
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < out; ++c) {
            double s = b[c];
            for (std::size_t i = 0; i < in; ++i) s += X[r * in + i] * W[i * out + c];
            Y[r * out + c] = relu && s < 0.0 ? 0.0 : s;
        }
    }
}

void relu_backward(const double* Y, double* dY, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k)
        if (Y[k] <= 0.0) dY[k] = 0.0;
}

void dense_backward(const double* X, const double* dY, std::size_t n, std::size_t in, std::size_t out,
                    const double* W, double* dW, double* db, double* dX) {
    for (std::size_t i = 0; i < in; ++i) {
        for (std::size_t c = 0; c < out; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += X[r * in + i] * dY[r * out + c];
            dW[i * out + c] = s;
        }
    }
    for (std::size_t c = 0; c < out; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += dY[r * out + c];
        db[c] = s;
    }
    if (!dX) return;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < in; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < out; ++c) s += dY[r * out + c] * W[i * out + c];
            dX[r * in + i] = s;
        }
    }
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t count, double lr, double beta1,
                 double beta2, double eps, long t) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < count; ++k) {
        m[k] = flush_tiny(beta1 * m[k] + (1.0 - beta1) * g[k]);
        v[k] = flush_tiny(beta2 * v[k] + (1.0 - beta2) * g[k] * g[k]);
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace reference

}  // namespace ranslice::dqn::kernels
