#pragma once

// Offline training against the measured delay table.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ranslice/core.hpp"
#include "ranslice/dqn/agent.hpp"
#include "ranslice/dqn/net.hpp"

namespace ranslice::dqn {

struct DqnConfig {
    double gamma = 0.99;
    AdamConfig adam;
    std::size_t batch = 128;
    std::size_t replay_capacity = 10'000;
    std::size_t episodes = 1500;
    std::size_t max_steps = 100;
    EpsilonSchedule epsilon;
    std::size_t target_update_every = 10;  // episodes
    std::size_t hidden_layers = 4;
    std::size_t hidden_width = 256;
    // Multiplies rewards before they enter the replay buffer. The logged
    // trace stays in reward units.
    double reward_scale = 1.0 / 80.0;
    // Rescale the gradient to at most this L2 norm; 0 disables.
    double grad_clip_norm = 0.0;
    std::uint64_t seed = 0;
    Backend backend = Backend::kParallel;
    bool dedupe = true;
    bool cache_targets = true;

    // Throws ConfigError.
    void validate() const;
    std::vector<std::size_t> layer_dims(std::size_t input_dim, std::size_t actions) const;
};

// Contextual-bandit view of the delay table: the reward depends only on the
// current state and action, and the next state is drawn uniformly from the
// grid regardless of the action.
class DatasetEnv {
public:
    // Throws IncompleteDatasetError when the table misses a grid cell.
    DatasetEnv(DelayTable table, QuantizerConfig quant, ActionSpace space, RewardSpec spec);

    std::size_t num_states() const { return states_.size(); }
    std::size_t num_actions() const { return space_.size(); }
    std::size_t feature_dim() const { return features_.front().size(); }

    const SliceState& state(std::size_t i) const { return states_.at(i); }
    const std::vector<double>& features(std::size_t i) const { return features_.at(i); }
    double reward(std::size_t state_index, std::size_t action_index) const;
    // Action index reward() is maximised at.
    std::size_t best_action(std::size_t state_index) const { return best_.at(state_index); }
    std::size_t sample_state(std::mt19937_64& rng) const;

    const QuantizerConfig& quantizer() const { return quant_; }
    const ActionSpace& space() const { return space_; }
    const DelayTable& table() const { return table_; }

private:
    DelayTable table_;
    QuantizerConfig quant_;
    ActionSpace space_;
    RewardSpec spec_;
    std::vector<SliceState> states_;
    std::vector<std::vector<double>> features_;
    std::vector<std::vector<double>> rewards_;
    std::vector<std::size_t> best_;
};

struct EpisodeStats {
    std::size_t episode = 0;
    double mean_reward = 0.0;
    double epsilon = 0.0;
    double mean_loss = 0.0;  // over this episode's updates; 0 before the buffer fills
    std::size_t updates = 0;
};

struct TrainResult {
    Mlp net;
    std::vector<double> reward_trace;  // mean unscaled reward per episode
    std::vector<std::size_t> target_sync_episodes;  // episodes after which the target was synced
    std::size_t updates = 0;
};

using EpisodeHook = std::function<void(const EpisodeStats&, const Mlp& net, const Mlp& target)>;

TrainResult train_offline(const DatasetEnv& env, const DqnConfig& cfg, const EpisodeHook& hook = {});

// Greedy weight for every grid state. Throws ShapeError when the network
// output does not match the action space.
TrainedPolicy extract_policy(const Mlp& net, const QuantizerConfig& quant, const ActionSpace& space,
                             Backend backend = Backend::kParallel);

// Weights reward() is maximised at, computed straight from the table.
TrainedPolicy oracle_policy(const DelayTable& table, const QuantizerConfig& quant, const ActionSpace& space,
                            const RewardSpec& spec);

}  // namespace ranslice::dqn
