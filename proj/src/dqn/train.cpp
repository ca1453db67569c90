#include "ranslice/dqn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ranslice/dqn/replay.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice::dqn {

void DqnConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(adam.eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (batch == 0) throw ConfigError("batch size must be positive");
    if (replay_capacity < batch) throw ConfigError("replay capacity must hold at least one batch");
    if (episodes == 0 || max_steps == 0) throw ConfigError("episodes and max_steps must be positive");
    if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= epsilon.start))
        throw ConfigError("need 0 <= eps_end <= eps_start <= 1");
    if (!(epsilon.anneal_fraction > 0.0 && epsilon.anneal_fraction <= 1.0))
        throw ConfigError("epsilon anneal fraction must lie in (0, 1]");
    if (target_update_every == 0) throw ConfigError("target update period must be positive");
    if (hidden_layers == 0 || hidden_width == 0) throw ConfigError("network needs at least one hidden layer");
    if (!(reward_scale > 0.0)) throw ConfigError("reward scale must be positive");
    if (grad_clip_norm < 0.0) throw ConfigError("gradient clip norm must be non-negative");
}

std::vector<std::size_t> DqnConfig::layer_dims(std::size_t input_dim, std::size_t actions) const {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden_layers, hidden_width);
    dims.push_back(actions);
    return dims;
}

DatasetEnv::DatasetEnv(DelayTable table, QuantizerConfig quant, ActionSpace space, RewardSpec spec)
    : table_(std::move(table)), quant_(quant), space_(std::move(space)), spec_(spec) {
    // A single-state grid (min == max) is a valid bandit; anything else must
    // pass the full quantizer checks.
    if (quant_.min_mbps != quant_.max_mbps) quant_.validate();
    spec_.validate();
    table_.require_complete(quant_, space_);
    for (double q : quant_.grid()) {
        const SliceState s{q, q};
        const auto feasible = feasible_set(s, table_, spec_, space_);
        std::vector<double> r;
        for (double w : space_.weights()) r.push_back(ranslice::reward(w, feasible, spec_, space_));
        best_.push_back(*space_.index_of(target_weight(feasible, spec_, space_)));
        states_.push_back(s);
        features_.push_back(encode_state(s, quant_));
        rewards_.push_back(std::move(r));
    }
}

double DatasetEnv::reward(std::size_t state_index, std::size_t action_index) const {
    if (state_index >= rewards_.size()) throw IndexError("state index out of range");
    if (action_index >= space_.size()) throw IndexError("action index out of range");
    return rewards_[state_index][action_index];
}

std::size_t DatasetEnv::sample_state(std::mt19937_64& rng) const {
    return std::uniform_int_distribution<std::size_t>(0, states_.size() - 1)(rng);
}

namespace {

void clip_norm(std::span<double> g, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double s = max_norm / norm;
    for (double& x : g) x *= s;
}

}  // namespace

TrainResult train_offline(const DatasetEnv& env, const DqnConfig& cfg, const EpisodeHook& hook) {
    cfg.validate();
    const std::size_t A = env.num_actions();
    Mlp net = Mlp::he_uniform(cfg.layer_dims(env.feature_dim(), A), derive_seed(cfg.seed, 1));
    Mlp target = net;
    AdamState adam(net.param_count());
    ReplayBuffer replay(cfg.replay_capacity, env.feature_dim());

    std::mt19937_64 explore_rng(derive_seed(cfg.seed, 2));
    std::mt19937_64 env_rng(derive_seed(cfg.seed, 3));
    std::mt19937_64 replay_rng(derive_seed(cfg.seed, 4));

    TdOptions td_opt;
    td_opt.dedupe = cfg.dedupe;
    td_opt.backend = cfg.backend;
    TargetCache cache;
    if (cfg.cache_targets) td_opt.target_cache = &cache;
    TdWorkspace ws;
    Batch batch;
    std::vector<double> grads(net.param_count());
    Mlp::Cache act_cache;
    Matrix act_in(1, env.feature_dim());

    TrainResult res{net, {}, {}, 0};
    res.reward_trace.reserve(cfg.episodes);

    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        const double eps = cfg.epsilon.at(ep, cfg.episodes);
        std::size_t s = env.sample_state(env_rng);
        double reward_sum = 0.0;
        double loss_sum = 0.0;
        std::size_t ep_updates = 0;
        for (std::size_t step = 0; step < cfg.max_steps; ++step) {
            const auto& x = env.features(s);
            std::copy(x.begin(), x.end(), act_in.data.begin());
            const Matrix& q = net.forward(act_in, act_cache, cfg.backend);
            const std::size_t a = act_epsilon_greedy({q.row(0), A}, eps, explore_rng);
            const double r = env.reward(s, a);
            const std::size_t s2 = env.sample_state(env_rng);
            reward_sum += r;
            // Episodes end only by truncation, which is not a terminal state.
            replay.push(x, a, r * cfg.reward_scale, env.features(s2), false);

            if (replay.sample_into(batch, cfg.batch, replay_rng)) {
                loss_sum += td_loss_and_grads(net, target, batch, cfg.gamma, grads, ws, td_opt);
                clip_norm(grads, cfg.grad_clip_norm);
                adam_step(net.params(), grads, adam, cfg.adam, cfg.backend);
                ++ep_updates;
            }
            s = s2;
        }
        if (!net.all_finite()) throw Error("training diverged: non-finite network parameters");
        if ((ep + 1) % cfg.target_update_every == 0) {
            target = net;
            cache.clear();
            res.target_sync_episodes.push_back(ep);
        }
        res.updates += ep_updates;
        const double mean_reward = reward_sum / static_cast<double>(cfg.max_steps);
        res.reward_trace.push_back(mean_reward);
        if (hook) {
            hook({ep, mean_reward, eps, ep_updates ? loss_sum / static_cast<double>(ep_updates) : 0.0, ep_updates},
                 net, target);
        }
    }
    res.net = std::move(net);
    return res;
}

TrainedPolicy extract_policy(const Mlp& net, const QuantizerConfig& quant, const ActionSpace& space,
                             Backend backend) {
    if (net.output_dim() != space.size())
        throw ShapeError("network has " + std::to_string(net.output_dim()) + " outputs for " +
                         std::to_string(space.size()) + " actions");
    TrainedPolicy policy;
    for (double q : quant.grid()) {
        const auto out = net.forward_one(encode_state({q, q}, quant), backend);
        policy.set(q, weight_of_action(argmax(out), space));
    }
    return policy;
}

TrainedPolicy oracle_policy(const DelayTable& table, const QuantizerConfig& quant, const ActionSpace& space,
                            const RewardSpec& spec) {
    TrainedPolicy policy;
    for (double q : quant.grid()) policy.set(q, target_weight(feasible_set({q, q}, table, spec, space), spec, space));
    return policy;
}

}  // namespace ranslice::dqn
