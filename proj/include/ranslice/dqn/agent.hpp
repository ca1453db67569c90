#pragma once

// Q-learning pieces: temporal-difference loss, action selection and the
// exploration schedule.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "ranslice/dqn/net.hpp"
#include "ranslice/dqn/replay.hpp"

namespace ranslice::dqn {

// max_a Q_target(s, a) per distinct state. Only valid while the target
// network is unchanged; clear() after every sync.
class TargetCache {
public:
    const double* find(std::span<const double> state) const;
    void insert(std::span<const double> state, double value);
    void clear();
    std::size_t size() const { return values_.size(); }

private:
    std::size_t dim_ = 0;
    std::vector<double> keys_;
    std::vector<double> values_;
};

struct TdOptions {
    // Forward/backward each distinct state once and sum per-sample gradients
    // onto it. Mathematically identical to the per-sample form.
    bool dedupe = true;
    Backend backend = Backend::kParallel;
    TargetCache* target_cache = nullptr;
};

struct TdResult {
    double loss = 0.0;
    std::vector<double> grads;
};

// Reusable buffers for the allocation-free overload.
struct TdWorkspace {
    Mlp::Cache online;
    Mlp::Cache target;
    Matrix unique_states;
    Matrix unique_next;
    std::vector<std::size_t> row_of;
    std::vector<std::size_t> next_row_of;
    std::vector<double> next_max;
    Matrix d_out;
};

// y = r + gamma * max_a' Q_target(s', a') (y = r when done), loss is the mean
// of (y - Q(s, a))^2 and the gradient flows through Q(s, a) only.
// Throws ShapeError on an empty batch or mismatched shapes.
TdResult td_loss_and_grads(const Mlp& net, const Mlp& target, const Batch& batch, double gamma,
                           const TdOptions& opt = {});
double td_loss_and_grads(const Mlp& net, const Mlp& target, const Batch& batch, double gamma,
                         std::span<double> grads, TdWorkspace& ws, const TdOptions& opt = {});

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> q);

// With probability eps a uniform action, otherwise argmax(q).
std::size_t act_epsilon_greedy(std::span<const double> q, double eps, std::mt19937_64& rng);

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.01;
    double anneal_fraction = 0.8;

    // Linear from `start` at episode 0 to `end` after anneal_fraction of the
    // run, then flat.
    double at(std::size_t episode, std::size_t episodes) const;
};

}  // namespace ranslice::dqn
