#pragma once

// Dense-layer and optimizer kernels. Matrices are row-major; a layer's
// weights are stored [in][out] so the forward pass is a sequence of axpys.
//
// Every output element is owned by exactly one thread and accumulated in a
// fixed order, so results do not depend on the thread count.

#include <cstddef>

namespace ranslice::dqn::kernels {

// Y[n][out] = X[n][in] * W[in][out] + b, then max(0, .) when `relu`.
void dense_forward(const double* X, std::size_t n, std::size_t in, const double* W, const double* b,
                   std::size_t out, double* Y, bool relu);

// dY[k] = 0 wherever Y[k] <= 0.
void relu_backward(const double* Y, double* dY, std::size_t count);

// dW = X^T dY, db = column sums of dY, dX = dY W^T (skipped when dX is null).
// Outputs are overwritten, not accumulated.
void dense_backward(const double* X, const double* dY, std::size_t n, std::size_t in, std::size_t out,
                    const double* W, double* dW, double* db, double* dX);

// One bias-corrected Adam step at step count t >= 1.
void adam_update(double* p, const double* g, double* m, double* v, std::size_t count, double lr, double beta1,
                 double beta2, double eps, long t);

// Plain serial loops with the textbook summation order.
namespace reference {

void dense_forward(const double* X, std::size_t n, std::size_t in, const double* W, const double* b,
                   std::size_t out, double* Y, bool relu);
void relu_backward(const double* Y, double* dY, std::size_t count);
void dense_backward(const double* X, const double* dY, std::size_t n, std::size_t in, std::size_t out,
                    const double* W, double* dW, double* db, double* dX);
void adam_update(double* p, const double* g, double* m, double* v, std::size_t count, double lr, double beta1,
                 double beta2, double eps, long t);

}  // namespace reference

}  // namespace ranslice::dqn::kernels
