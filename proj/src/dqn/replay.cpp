#include "ranslice/dqn/replay.hpp"

#include <algorithm>
#include <string>

#include "ranslice/errors.hpp"

namespace ranslice::dqn {

Transition Batch::at(std::size_t i) const {
    Transition t;
    t.state.assign(states.row(i), states.row(i) + states.cols);
    t.action = actions.at(i);
    t.reward = rewards.at(i);
    t.next_state.assign(next_states.row(i), next_states.row(i) + next_states.cols);
    t.done = done.at(i) != 0;
    return t;
}

Batch make_batch(std::span<const Transition> transitions) {
    Batch b;
    if (transitions.empty()) return b;
    const std::size_t d = transitions.front().state.size();
    b.states.resize(transitions.size(), d);
    b.next_states.resize(transitions.size(), d);
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& t = transitions[i];
        if (t.state.size() != d || t.next_state.size() != d) throw ShapeError("transitions differ in state size");
        std::copy(t.state.begin(), t.state.end(), b.states.row(i));
        std::copy(t.next_state.begin(), t.next_state.end(), b.next_states.row(i));
        b.actions.push_back(t.action);
        b.rewards.push_back(t.reward);
        b.done.push_back(t.done ? 1 : 0);
    }
    return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim)
    : capacity_(capacity),
      dim_(state_dim),
      states_(capacity * state_dim),
      next_states_(capacity * state_dim),
      actions_(capacity),
      rewards_(capacity),
      done_(capacity),
      picked_(capacity, 0) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    if (state_dim == 0) throw ShapeError("state dimension must be positive");
}

void ReplayBuffer::push(std::span<const double> state, std::size_t action, double reward,
                        std::span<const double> next_state, bool done) {
    if (state.size() != dim_ || next_state.size() != dim_)
        throw ShapeError("transition state has " + std::to_string(state.size()) + " features, buffer expects " +
                         std::to_string(dim_));
    std::copy(state.begin(), state.end(), states_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
    std::copy(next_state.begin(), next_state.end(), next_states_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
    actions_[head_] = action;
    rewards_[head_] = reward;
    done_[head_] = done ? 1 : 0;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

void ReplayBuffer::push(const Transition& t) { push(t.state, t.action, t.reward, t.next_state, t.done); }

Transition ReplayBuffer::get(std::size_t i) const {
    if (i >= size_) throw IndexError("replay index " + std::to_string(i) + " out of range");
    const std::size_t slot = (head_ + capacity_ - size_ + i) % capacity_;
    Transition t;
    t.state.assign(states_.begin() + static_cast<std::ptrdiff_t>(slot * dim_),
                   states_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * dim_));
    t.next_state.assign(next_states_.begin() + static_cast<std::ptrdiff_t>(slot * dim_),
                        next_states_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * dim_));
    t.action = actions_[slot];
    t.reward = rewards_[slot];
    t.done = done_[slot] != 0;
    return t;
}

bool ReplayBuffer::sample_into(Batch& out, std::size_t batch, std::mt19937_64& rng) {
    if (!ready(batch)) return false;
    // Rejection sampling against a mark array; batch << size in practice, and
    // the loop still terminates when batch == size.
    picks_.clear();
    std::uniform_int_distribution<std::size_t> dist(0, size_ - 1);
    while (picks_.size() < batch) {
        const std::size_t k = dist(rng);
        if (picked_[k]) continue;
        picked_[k] = 1;
        picks_.push_back(k);
    }
    out.states.resize(batch, dim_);
    out.next_states.resize(batch, dim_);
    out.actions.resize(batch);
    out.rewards.resize(batch);
    out.done.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t k = picks_[i];
        picked_[k] = 0;
        std::copy_n(states_.begin() + static_cast<std::ptrdiff_t>(k * dim_), dim_, out.states.row(i));
        std::copy_n(next_states_.begin() + static_cast<std::ptrdiff_t>(k * dim_), dim_, out.next_states.row(i));
        out.actions[i] = actions_[k];
        out.rewards[i] = rewards_[k];
        out.done[i] = done_[k];
    }
    return true;
}

std::optional<Batch> ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) {
    Batch b;
    if (!sample_into(b, batch, rng)) return std::nullopt;
    return b;
}

}  // namespace ranslice::dqn
