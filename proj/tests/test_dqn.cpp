#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "ranslice/dqn/agent.hpp"
#include "ranslice/dqn/net.hpp"
#include "ranslice/dqn/replay.hpp"
#include "ranslice/dqn/train.hpp"
#include "ranslice/errors.hpp"

using namespace ranslice;
using namespace ranslice::dqn;

namespace {

Batch random_batch(std::size_t n, std::size_t dim, std::size_t actions, std::mt19937_64& rng, int distinct = 0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> pool;
    for (int i = 0; i < distinct; ++i) {
        std::vector<double> s(dim);
        for (auto& x : s) x = u(rng);
        pool.push_back(s);
    }
    std::vector<Transition> ts;
    for (std::size_t i = 0; i < n; ++i) {
        Transition t;
        auto pick = [&] {
            if (!pool.empty()) return pool[rng() % pool.size()];
            std::vector<double> s(dim);
            for (auto& x : s) x = u(rng);
            return s;
        };
        t.state = pick();
        t.next_state = pick();
        t.action = rng() % actions;
        t.reward = u(rng);
        t.done = rng() % 5 == 0;
        ts.push_back(t);
    }
    return make_batch(ts);
}

// Table where state s has its smallest feasible weight at `target(s)`.
DelayTable staircase(const QuantizerConfig& quant, const ActionSpace& space, double (*target)(double)) {
    DelayTable t;
    for (double s : quant.grid())
        for (double w : space.weights()) t.set(s, w, {w >= target(s) ? 5.0 : 20.0, 0, 0});
    return t;
}

double load_target(double s) { return std::clamp(10.0 + 5.0 * std::floor(s / 25.0), 10.0, 90.0); }

}  // namespace

TEST_CASE("mlp: shapes and layout") {
    const Mlp net({1, 256, 256, 256, 256, 17});
    CHECK(net.num_layers() == 5);
    CHECK(net.param_count() == 2 * 256 + 3 * (256 * 256 + 256) + 256 * 17 + 17);
    CHECK(net.forward_one(std::vector<double>{0.3}).size() == 17);
    CHECK(net.weights(0).size() == 256);
    CHECK(net.bias(4).size() == 17);
    CHECK_THROWS_AS(Mlp({17}), ShapeError);
    CHECK_THROWS_AS(Mlp({1, 0, 17}), ShapeError);
    CHECK_THROWS_AS(net.forward(Matrix(4, 2)), ShapeError);
}

TEST_CASE("mlp: zero network outputs its last bias") {
    Mlp net({1, 8, 8, 17});
    for (std::size_t a = 0; a < 17; ++a) net.bias(2)[a] = static_cast<double>(a) - 3.0;
    for (double x : {-5.0, 0.0, 0.7, 100.0}) {
        const auto q = net.forward_one(std::vector<double>{x});
        for (std::size_t a = 0; a < 17; ++a) CHECK(q[a] == static_cast<double>(a) - 3.0);
    }
    auto he = Mlp::he_uniform({1, 8, 8, 17}, 3);
    const auto q = he.forward_one(std::vector<double>{0.0});
    for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("mlp: he-uniform bounds, zero biases, seeded") {
    const auto a = Mlp::he_uniform({4, 64, 17}, 9);
    CHECK(a == Mlp::he_uniform({4, 64, 17}, 9));
    CHECK_FALSE(a == Mlp::he_uniform({4, 64, 17}, 10));
    for (double w : a.weights(0)) CHECK(std::fabs(w) <= std::sqrt(6.0 / 4.0));
    for (double w : a.weights(1)) CHECK(std::fabs(w) <= std::sqrt(6.0 / 64.0));
    for (double b : a.bias(0)) CHECK(b == 0.0);
    CHECK(a.all_finite());
}

TEST_CASE("mlp: both backends agree") {
    const auto net = Mlp::he_uniform({1, 256, 256, 256, 256, 17}, 5);
    std::mt19937_64 rng(1);
    Matrix x(128, 1);
    for (auto& v : x.data) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto y = net.forward(x, Backend::kParallel);
    const auto y_ref = net.forward(x, Backend::kReference);
    for (std::size_t i = 0; i < y.data.size(); ++i) CHECK(y.data[i] == doctest::Approx(y_ref.data[i]).epsilon(1e-12));

    Mlp::Cache c1, c2;
    net.forward(x, c1, Backend::kParallel);
    net.forward(x, c2, Backend::kReference);
    Matrix d(128, 17);
    for (auto& v : d.data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    std::vector<double> g1(net.param_count()), g2(net.param_count());
    net.backward(c1, d, g1, Backend::kParallel);
    net.backward(c2, d, g2, Backend::kReference);
    for (std::size_t i = 0; i < g1.size(); ++i) REQUIRE(g1[i] == doctest::Approx(g2[i]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("td loss: gamma 0 regresses onto the reward") {
    std::mt19937_64 rng(2);
    const auto net = Mlp::he_uniform({3, 16, 5}, 1);
    const auto target = Mlp::he_uniform({3, 16, 5}, 2);
    const auto batch = random_batch(32, 3, 5, rng);
    const auto res = td_loss_and_grads(net, target, batch, 0.0);
    const auto q = net.forward(batch.states);
    double expect = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double e = q(i, batch.actions[i]) - batch.rewards[i];
        expect += e * e;
    }
    CHECK(res.loss == doctest::Approx(expect / 32.0).epsilon(1e-12));
}

TEST_CASE("td loss: zero when every Q(s,a) equals its target") {
    Mlp net({2, 4, 3});
    const double b[] = {0.5, -1.0, 2.0};
    std::copy(b, b + 3, net.bias(1).begin());
    const double gamma = 0.5;  // keeps every target exactly representable
    std::vector<Transition> ts;
    for (std::size_t a = 0; a < 3; ++a) {
        const double r = b[a] - gamma * 2.0;
        ts.push_back({{0.1, 0.2}, a, r, {0.3, 0.4}, false});
        ts.push_back({{0.5, 0.6}, a, b[a], {0.7, 0.8}, true});
    }
    const auto res = td_loss_and_grads(net, net, make_batch(ts), gamma);
    CHECK(res.loss == 0.0);
    for (double g : res.grads) CHECK(g == 0.0);
}

TEST_CASE("td loss: gradient of a 3-parameter net against finite differences") {
    std::mt19937_64 rng(3);
    auto net = Mlp::he_uniform({2, 1}, 4);  // W is 2x1 and b is 1: three parameters
    net.bias(0)[0] = 0.3;
    REQUIRE(net.param_count() == 3);
    const auto target = Mlp::he_uniform({2, 1}, 5);
    const auto batch = random_batch(16, 2, 1, rng);
    const auto res = td_loss_and_grads(net, target, batch, 0.7);
    auto loss_at = [&](const std::vector<double>& p) {
        Mlp probe = net;
        std::copy(p.begin(), p.end(), probe.params().begin());
        return td_loss_and_grads(probe, target, batch, 0.7).loss;
    };
    const std::vector<double> p0(net.params().begin(), net.params().end());
    const auto num = oracle::numeric_gradient(loss_at, p0, 1e-5);
    for (std::size_t i = 0; i < 3; ++i) CHECK(oracle::relative_error(res.grads[i], num[i]) < 1e-6);
}

TEST_CASE("td loss: deduplication and the target cache change nothing") {
    std::mt19937_64 rng(6);
    const auto net = Mlp::he_uniform({1, 32, 32, 17}, 7);
    const auto target = Mlp::he_uniform({1, 32, 32, 17}, 8);
    const auto batch = random_batch(128, 1, 17, rng, 14);
    const auto plain = td_loss_and_grads(net, target, batch, 0.99, {false, Backend::kReference, nullptr});
    TargetCache cache;
    for (int pass = 0; pass < 2; ++pass) {
        const auto fast = td_loss_and_grads(net, target, batch, 0.99, {true, Backend::kParallel, &cache});
        CHECK(fast.loss == doctest::Approx(plain.loss).epsilon(1e-12));
        for (std::size_t i = 0; i < plain.grads.size(); ++i)
            REQUIRE(fast.grads[i] == doctest::Approx(plain.grads[i]).epsilon(1e-9).scale(1.0));
    }
    CHECK(cache.size() <= 14);
    TdWorkspace ws;
    std::vector<double> g(net.param_count());
    CHECK(td_loss_and_grads(net, target, batch, 0.99, g, ws) == doctest::Approx(plain.loss).epsilon(1e-12));
}

TEST_CASE("td loss: shape errors") {
    std::mt19937_64 rng(1);
    const Mlp net({2, 4, 3});
    CHECK_THROWS_AS(td_loss_and_grads(net, net, make_batch({}), 0.9), ShapeError);
    CHECK_THROWS_AS(td_loss_and_grads(net, net, random_batch(4, 3, 3, rng), 0.9), ShapeError);
    CHECK_THROWS_AS(td_loss_and_grads(net, Mlp({2, 4, 4}), random_batch(4, 2, 3, rng), 0.9), ShapeError);
}

TEST_CASE("adam: first step moves by lr") {
    std::vector<double> p{0.0}, g{1.0};
    AdamState st(1);
    adam_step(p, g, st, AdamConfig{});
    CHECK(st.t == 1);
    CHECK(std::fabs(std::fabs(p[0]) - 1e-3) < 1e-6);
    CHECK(p[0] < 0.0);
}

TEST_CASE("adam: zero gradient leaves parameters alone") {
    std::vector<double> p{1.5, -2.0}, g{0.0, 0.0};
    AdamState st(2);
    for (int i = 0; i < 10; ++i) adam_step(p, g, st, AdamConfig{});
    CHECK(p == std::vector<double>{1.5, -2.0});
}

TEST_CASE("adam: constant gradient follows the closed form") {
    const AdamConfig cfg;
    for (double g0 : {1.0, -0.25, 3e-4}) {
        std::vector<double> p{2.0}, g{g0};
        AdamState st(1);
        double prev = p[0];
        for (int t = 1; t <= 100; ++t) {
            adam_step(p, g, st, cfg);
            CHECK(p[0] == doctest::Approx(oracle::adam_constant_grad_position(2.0, g0, cfg.lr, cfg.eps, t)).epsilon(1e-12));
            CHECK((p[0] - prev) * g0 < 0.0);  // monotone against the gradient
            prev = p[0];
        }
    }
    std::vector<double> p{0.0}, g{1.0, 2.0};
    AdamState st(1);
    CHECK_THROWS_AS(adam_step(p, g, st, cfg), ShapeError);
}

TEST_CASE("epsilon-greedy") {
    std::mt19937_64 rng(12);
    std::vector<double> q(17, 0.0);
    CHECK(act_epsilon_greedy(q, 0.0, rng) == 0);
    q[16] = 5.0;
    CHECK(act_epsilon_greedy(q, 0.0, rng) == 16);
    q[3] = 5.0;
    CHECK(argmax(q) == 3);

    std::vector<int> counts(17, 0);
    for (int i = 0; i < 17'000; ++i) ++counts[act_epsilon_greedy(q, 1.0, rng)];
    for (int c : counts) {
        CHECK(c >= 800);
        CHECK(c <= 1200);
    }
    CHECK_THROWS_AS(act_epsilon_greedy(q, 1.5, rng), ValidationError);
    CHECK_THROWS_AS(act_epsilon_greedy(q, -0.1, rng), ValidationError);
}

TEST_CASE("epsilon schedule") {
    const EpsilonSchedule e;
    CHECK(e.at(0, 1500) == 1.0);
    CHECK(e.at(600, 1500) == doctest::Approx(0.505));
    CHECK(e.at(1200, 1500) == doctest::Approx(0.01));
    CHECK(e.at(1499, 1500) == doctest::Approx(0.01));
    double prev = 2.0;
    for (std::size_t ep = 0; ep < 1500; ++ep) {
        CHECK(e.at(ep, 1500) <= prev);
        prev = e.at(ep, 1500);
    }
}

TEST_CASE("replay: ring eviction") {
    ReplayBuffer buf(10'000, 1);
    for (int i = 0; i <= 10'000; ++i) buf.push(Transition{{static_cast<double>(i)}, 0, static_cast<double>(i), {0.0}, false});
    CHECK(buf.size() == 10'000);
    CHECK(buf.get(0).reward == 1.0);
    CHECK(buf.get(9'999).reward == 10'000.0);
    for (std::size_t i = 0; i < buf.size(); ++i) REQUIRE(buf.get(i).reward != 0.0);
    CHECK_THROWS_AS(buf.push(Transition{{1.0, 2.0}, 0, 0.0, {0.0}, false}), ShapeError);
}

TEST_CASE("replay: sampling") {
    std::mt19937_64 rng(8);
    ReplayBuffer buf(10'000, 1);
    for (int i = 0; i < 127; ++i) buf.push(Transition{{static_cast<double>(i)}, 0, static_cast<double>(i), {0.0}, false});
    CHECK_FALSE(buf.sample(128, rng).has_value());
    CHECK_FALSE(buf.ready(128));
    buf.push(Transition{{127.0}, 0, 127.0, {0.0}, true});
    const auto b = buf.sample(128, rng);
    REQUIRE(b.has_value());
    std::set<double> seen(b->rewards.begin(), b->rewards.end());
    CHECK(seen.size() == 128);
    CHECK(*seen.begin() == 0.0);
    CHECK(*seen.rbegin() == 127.0);
    for (std::size_t i = 0; i < b->size(); ++i) CHECK(b->at(i).state[0] == b->rewards[i]);
}

TEST_CASE("dqn config") {
    DqnConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.layer_dims(1, 17) == std::vector<std::size_t>{1, 256, 256, 256, 256, 17});
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = DqnConfig{};
    cfg.epsilon.end = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = DqnConfig{};
    cfg.batch = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("dataset env mirrors core's reward") {
    const QuantizerConfig quant;
    const ActionSpace space;
    const auto table = staircase(quant, space, load_target);
    const DatasetEnv env(table, quant, space, RewardSpec{});
    CHECK(env.num_states() == 14);
    CHECK(env.num_actions() == 17);
    for (std::size_t s = 0; s < env.num_states(); ++s) {
        const auto feasible = feasible_set(env.state(s), table, RewardSpec{}, space);
        for (std::size_t a = 0; a < 17; ++a) CHECK(env.reward(s, a) == reward(space.weights()[a], feasible, RewardSpec{}, space));
        CHECK(space.weights()[env.best_action(s)] == load_target(env.state(s).quantized_rate_mbps));
    }
    DelayTable holey = table;
    holey = DelayTable{};
    holey.set(10, 10, {});
    CHECK_THROWS_AS(DatasetEnv(holey, quant, space, RewardSpec{}), IncompleteDatasetError);
}

TEST_CASE("training on a single-state bandit finds the feasible minimum") {
    const QuantizerConfig quant{10, 60, 60};
    const ActionSpace space;
    const auto table = staircase(quant, space, [](double) { return 50.0; });
    const DatasetEnv env(table, quant, space, RewardSpec{});
    DqnConfig cfg;
    cfg.episodes = 60;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 32;
    cfg.batch = 32;
    cfg.seed = 4;
    for (double gamma : {0.5, 0.99}) {
        cfg.gamma = gamma;
        const auto res = train_offline(env, cfg);
        CHECK(extract_policy(res.net, quant, space).lookup(60) == std::optional<double>(50));
        CHECK(res.reward_trace.size() == 60);
    }
}

TEST_CASE("training: target sync cadence, hook, determinism, backends") {
    const QuantizerConfig quant;
    const ActionSpace space;
    const DatasetEnv env(staircase(quant, space, load_target), quant, space, RewardSpec{});
    DqnConfig cfg;
    cfg.episodes = 25;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 16;
    cfg.batch = 16;
    cfg.seed = 7;
    std::size_t calls = 0;
    const auto a = train_offline(env, cfg, [&](const EpisodeStats& s, const Mlp& net, const Mlp&) {
        CHECK(s.episode == calls);
        CHECK(net.all_finite());
        ++calls;
    });
    CHECK(calls == 25);
    CHECK(a.target_sync_episodes == std::vector<std::size_t>{9, 19});
    CHECK(a.updates > 0);
    const auto b = train_offline(env, cfg);
    CHECK(a.net == b.net);
    CHECK(a.reward_trace == b.reward_trace);
    for (double r : a.reward_trace) {
        CHECK(r <= 0.0);
        CHECK(r >= -80.0);
    }

    cfg.backend = Backend::kReference;
    cfg.dedupe = false;
    cfg.cache_targets = false;
    const auto c = train_offline(env, cfg);
    CHECK(c.reward_trace.front() == a.reward_trace.front());
    CHECK(extract_policy(c.net, quant, space).size() == 14);
}

TEST_CASE("policy extraction and the oracle") {
    const QuantizerConfig quant;
    const ActionSpace space;
    const auto table = staircase(quant, space, load_target);
    const auto oracle = oracle_policy(table, quant, space, RewardSpec{});
    CHECK(oracle.size() == 14);
    for (double s : quant.grid()) CHECK(oracle.lookup(s) == std::optional<double>(load_target(s)));

    // A net whose output biases favour action 3 everywhere.
    Mlp net({1, 4, 17});
    net.bias(1)[3] = 1.0;
    const auto p = extract_policy(net, quant, space);
    CHECK(p.size() == 14);
    for (double s : quant.grid()) CHECK(p.lookup(s) == std::optional<double>(25));
    CHECK_THROWS_AS(extract_policy(Mlp({1, 4, 9}), quant, space), ShapeError);
}
