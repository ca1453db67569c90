#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ranslice/dqn/net.hpp"

namespace ranslice::dqn {

struct Transition {
    std::vector<double> state;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

struct Batch {
    Matrix states;
    std::vector<std::size_t> actions;
    std::vector<double> rewards;
    Matrix next_states;
    std::vector<std::uint8_t> done;

    std::size_t size() const { return actions.size(); }
    Transition at(std::size_t i) const;
};

Batch make_batch(std::span<const Transition> transitions);

// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t state_dim);

    // Throws ShapeError when a state has the wrong dimension.
    void push(const Transition& t);
    void push(std::span<const double> state, std::size_t action, double reward, std::span<const double> next_state,
              bool done);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t state_dim() const { return dim_; }
    bool ready(std::size_t batch) const { return batch > 0 && size_ >= batch; }

    // Distinct transitions drawn uniformly; nothing when fewer than `batch`
    // are stored.
    std::optional<Batch> sample(std::size_t batch, std::mt19937_64& rng);
    // Same, writing into an existing batch. Returns false when not ready.
    bool sample_into(Batch& out, std::size_t batch, std::mt19937_64& rng);

    // i = 0 is the oldest stored transition.
    Transition get(std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t head_ = 0;  // next write position
    std::size_t size_ = 0;
    std::vector<double> states_;
    std::vector<double> next_states_;
    std::vector<std::size_t> actions_;
    std::vector<double> rewards_;
    std::vector<std::uint8_t> done_;
    std::vector<std::uint8_t> picked_;
    std::vector<std::size_t> picks_;
};

}  // namespace ranslice::dqn
