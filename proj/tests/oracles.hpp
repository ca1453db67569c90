#pragma once

// Independent reference computations used by the tests. None of these call
// into the library code they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// Round-half-up quantization and clipping in integer tenths of a Mbps.
// `tenths` is the raw rate times ten; returns the state in whole Mbps.
inline long quantize_tenths(long tenths, long step, long lo, long hi) {
    const long num = tenths - 10 * lo + 5 * step;  // shift by half a step
    const long den = 10 * step;
    long k = num / den;
    if (num % den != 0 && num < 0) --k;  // floor for negatives
    long q = lo + k * step;
    if (q < lo) q = lo;
    if (q > hi) q = hi;
    return q;
}

// For one state: weight maximising -|a - min{w : delay(w) < threshold}|, with
// the largest weight standing in for an empty feasible set. Found by scoring
// every action.
inline double best_weight(const std::vector<double>& weights, const std::vector<double>& delays, double threshold) {
    double target = weights.back();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (delays[i] < threshold) {
            target = weights[i];
            break;
        }
    }
    double best = weights.front();
    double best_score = -1e300;
    for (double a : weights) {
        const double score = -std::fabs(a - target);
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

// Central finite difference of f at x along every coordinate.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double relative_error(double a, double n) {
    return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-6});
}

// With a constant gradient g both bias-corrected Adam moments equal g and g^2
// exactly, so every step moves the parameter by lr * g / (|g| + eps).
inline double adam_constant_grad_position(double p0, double g, double lr, double eps, int steps) {
    return p0 - steps * lr * g / (std::fabs(g) + eps);
}

// Cell capacity in Mbps from first principles.
inline double cell_capacity_mbps(int prbs, int re_per_prb, double bits_per_re, double slots_per_s) {
    return std::floor(prbs * re_per_prb * bits_per_re) * slots_per_s / 1e6;
}

}  // namespace oracle
