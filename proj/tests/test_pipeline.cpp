#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "ranslice/errors.hpp"
#include "ranslice/pipeline.hpp"
#include "tmpdir.hpp"

using namespace ranslice;
using namespace std::chrono_literals;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t data_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++n;
    return n;
}

// 3 states x 3 weights, short windows, a tiny network.
RunConfig small_config() {
    RunConfig c;
    c.quantizer = {40, 20, 100};
    c.actions = {10, 90, 40};
    c.dataset.window_s = 1;
    c.dqn.episodes = 12;
    c.dqn.hidden_layers = 2;
    c.dqn.hidden_width = 16;
    c.dqn.batch = 16;
    c.eval.slice1_min_mbps = 40;
    c.eval.slice1_max_mbps = 140;
    c.eval.slice1_step_mbps = 100;
    c.eval.duration_s = 2;
    c.serve.duration_s = 10;
    return c;
}

TrainedPolicy flat_policy(const RunConfig& c, double w) {
    TrainedPolicy p;
    for (double s : c.quantizer.grid()) p.set(s, w);
    return p;
}

}  // namespace

TEST_CASE("dataset: rows, table, determinism") {
    TempDir dir;
    const auto c = small_config();
    const auto a = run_dataset(c, 3, dir / "a");
    CHECK(a.cells == 9);
    CHECK(a.rows == 90);
    CHECK(a.failed_cells.empty());
    CHECK(a.conservation_violations == 0);
    CHECK(a.boundaries_checked == 90);
    REQUIRE(a.table.has_value());
    CHECK(a.table->size() == 9);
    CHECK(data_lines(a.store_path) == 90);
    CHECK(slurp(a.store_path).rfind("# {", 0) == 0);

    std::ifstream in(a.table_path);
    nlohmann::json meta;
    CHECK(read_delay_table_csv(in, &meta) == *a.table);
    CHECK(meta["artifact"] == "delay_table");
    CHECK(meta["seed"] == 3);
    CHECK(meta["config_hash"] == config_hash(c));

    const auto b = run_dataset(c, 3, dir / "b");
    CHECK(slurp(a.table_path) == slurp(b.table_path));
    CHECK(slurp(a.store_path) == slurp(b.store_path));
}

TEST_CASE("dataset: two-minute windows give 1200 rows per cell") {
    TempDir dir;
    auto c = small_config();
    c.quantizer = {10, 60, 70};
    c.actions = {50, 90, 40};
    c.dataset.window_s = 120;
    const auto res = run_dataset(c, 1, dir.path());
    CHECK(res.cells == 4);
    CHECK(res.rows == 4800);
}

TEST_CASE("train: artifacts and reproducibility") {
    TempDir dir;
    const auto c = small_config();
    const auto ds = run_dataset(c, 1, dir / "ds");
    const auto a = run_train(c, 7, *ds.table, dir / "a", "2024-01-02");
    const auto b = run_train(c, 7, *ds.table, dir / "b", "2024-01-02");
    CHECK(a.policy.size() == 3);
    CHECK(a.reward_trace.size() == 12);
    CHECK(slurp(a.policy_path) == slurp(b.policy_path));
    CHECK(slurp(a.trace_path) == slurp(b.trace_path));
    CHECK(slurp(a.svg_path).find("<svg") != std::string::npos);

    std::ifstream in(a.policy_path);
    nlohmann::json meta;
    CHECK(read_policy_csv(in, &meta) == a.policy);
    CHECK(meta["training_date"] == "2024-01-02");
    CHECK(meta["episodes"] == 12);
    CHECK(meta["layer_dims"] == nlohmann::json::array({1, 16, 16, 3}));

    std::ifstream tr(a.trace_path);
    CHECK(read_reward_trace_csv(tr) == a.reward_trace);
    CHECK(data_lines(a.trace_path) == 13);  // header + 12 episodes
}

TEST_CASE("train: an incomplete table names the missing cell") {
    TempDir dir;
    const auto c = small_config();
    DelayTable t;
    t.set(20, 10, {1, 0, 0});
    CHECK_THROWS_AS(run_train(c, 1, t, dir.path(), "2024-01-01"), IncompleteDatasetError);
}

TEST_CASE("training date defaults") {
    const auto d = default_training_date();
    CHECK(d.size() == 10);
    CHECK(d[4] == '-');
    CHECK(d[7] == '-');
}

TEST_CASE("eval: results table and figures") {
    TempDir dir;
    const auto c = small_config();
    const auto res = run_eval(c, 1, flat_policy(c, 90), dir.path());
    REQUIRE(res.results.size() == 4);
    CHECK(res.results[0].scheduler == "drl");
    CHECK(res.results[1].scheduler == "pf");
    // The first window runs at the initial 50% before the policy takes over.
    CHECK(*res.results[0].mean_weight_pct == doctest::Approx((50.0 + 19 * 90.0) / 20.0));
    CHECK_FALSE(res.results[1].mean_weight_pct.has_value());
    for (const auto& r : res.results) {
        CHECK(r.windows == 20);
        CHECK(r.policy_mismatches == 0);
        CHECK(r.conservation_violations == 0);
        for (const auto& s : r.slices)
            CHECK(s.arrived_bytes == s.served_bytes + s.dropped_bytes + s.queued_bytes);
    }
    CHECK(data_lines(res.results_path) == 1 + 4 * 2);
    CHECK(res.figures.size() == 3);
    for (const auto& f : res.figures) CHECK(std::filesystem::exists(f));
}

TEST_CASE("eval: policy with the wrong grid is refused") {
    TempDir dir;
    const auto c = small_config();
    TrainedPolicy p;
    p.set(20, 50);
    CHECK_THROWS_AS(run_eval(c, 1, p, dir.path()), PolicyError);
}

TEST_CASE("serve in-process: 10 simulated seconds give 100 rows") {
    TempDir dir;
    const auto c = small_config();
    std::atomic<bool> stop{false};
    const auto res = run_serve(c, 1, flat_policy(c, 50), dir.path(), stop);
    CHECK(res.slots == 20'000);
    CHECK(res.indications == 100);
    CHECK(res.rows == 100);
    CHECK(data_lines(res.store_path) == 100);
}

TEST_CASE("serve: pf disables the RC xApp, drl needs a policy") {
    TempDir dir;
    auto c = small_config();
    c.serve.scheduler = "pf";
    std::atomic<bool> stop{false};
    const auto res = run_serve(c, 1, std::nullopt, dir.path(), stop);
    CHECK(res.rows == 100);
    CHECK(res.controls_sent == 0);
    c.serve.scheduler = "drl";
    CHECK_THROWS_AS(run_serve(c, 1, std::nullopt, dir.path(), stop), ValidationError);
}

TEST_CASE("serve: the stop flag ends an open-ended run") {
    TempDir dir;
    auto c = small_config();
    c.serve.duration_s = 0;
    c.serve.pace = 20;
    std::atomic<bool> stop{false};
    std::thread stopper([&] {
        std::this_thread::sleep_for(300ms);
        stop = true;
    });
    const auto res = run_serve(c, 1, flat_policy(c, 50), dir.path(), stop);
    stopper.join();
    CHECK(res.rows > 0);
    CHECK(res.rows == res.indications);
}

TEST_CASE("serve over tcp on an ephemeral port") {
    TempDir dir;
    auto c = small_config();
    c.transport.mode = "tcp";
    c.transport.port = 0;
    c.serve.duration_s = 2;
    std::atomic<bool> stop{false};
    std::uint16_t ready_port = 0;
    const auto res = run_serve(c, 1, flat_policy(c, 50), dir.path(), stop, {}, [&](std::uint16_t p) { ready_port = p; });
    CHECK(res.port != 0);
    CHECK(ready_port == res.port);
    CHECK(res.indications == 20);
    CHECK(res.rows == 20);
}

TEST_CASE("serve over tcp with an external xApp") {
    TempDir dir;
    auto c = small_config();
    c.transport.mode = "tcp";
    c.transport.port = 0;
    c.serve.duration_s = 0;
    c.serve.pace = 5;
    c.serve.scheduler = "fixed";
    c.serve.fixed_weight_pct = 90;
    c.serve.launch_xapps = false;
    std::atomic<bool> stop{false};
    std::atomic<std::uint16_t> port{0};
    std::thread server([&] { run_serve(c, 1, std::nullopt, dir.path(), stop, {}, [&](std::uint16_t p) { port = p; }); });
    while (port == 0) std::this_thread::sleep_for(1ms);

    auto store = KpmStore::in_memory();
    SmXapp sm(store, RunMeta{"external", "fixed", 90.0, 1, 60, 117});
    XappHost host(e2::connect_tcp("127.0.0.1", port), sm, nullptr);
    host.subscribe(100);
    while (store.size() < 5) REQUIRE(host.pump_for(2000ms));
    stop = true;
    server.join();
    CHECK(host.subscription_id().has_value());
    for (const auto& r : store.rows()) CHECK(r.record.active_weight_pct == std::optional<double>(90));
}

TEST_CASE("serve: a taken port is a startup error") {
    TempDir dir;
    e2::TcpListener squatter("127.0.0.1", 0);
    auto c = small_config();
    c.transport.mode = "tcp";
    c.transport.port = squatter.port();
    std::atomic<bool> stop{false};
    CHECK_THROWS_AS(run_serve(c, 1, flat_policy(c, 50), dir.path(), stop), TransportError);
}
