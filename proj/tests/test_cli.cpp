#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "ranslice/e2bus.hpp"
#include "tmpdir.hpp"

#ifndef SLICECTL_PATH
#error "SLICECTL_PATH must point at the slicectl binary"
#endif

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SLICECTL_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t data_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++n;
    return n;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmall = R"({"quantizer":{"min_mbps":20,"max_mbps":100,"step_mbps":40},
  "actions":{"min_pct":10,"max_pct":90,"step_pct":40},
  "dataset":{"window_s":1},
  "dqn":{"episodes":8,"hidden_layers":1,"hidden_width":8,"batch":8},
  "eval":{"slice1_min_mbps":40,"slice1_max_mbps":140,"slice1_step_mbps":100,"duration_s":1}})";

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("dataset --bogus") == 1);
    CHECK(run("--config /nonexistent/cfg.json dataset") == 1);
    CHECK(run("serve --scheduler magic") == 1);
    CHECK(run("--help") == 0);
}

TEST_CASE("cli: validation errors exit 1") {
    TempDir dir;
    write(dir / "unknown.json", R"({"dqn":{"episdoes":3}})");
    write(dir / "table.csv", "state_mbps,weight_pct,mean_delay_ms,mean_loss_pct,mean_served_mbps\n10,10,1,0,10\n");
    write(dir / "policy.csv", "state_mbps,weight_pct\n10,37\n");
    const std::string out = " --out " + dir.path().string();
    CHECK(run("--config " + (dir / "unknown.json").string() + " dataset" + out) == 1);
    CHECK(run("train --table " + (dir / "table.csv").string() + out) == 1);
    CHECK(run("train --table " + (dir / "missing.csv").string() + out) == 1);
    CHECK(run("eval --policy " + (dir / "policy.csv").string() + out) == 1);
    CHECK(run("serve --scheduler drl --duration-s 1" + out) == 1);
    CHECK(run("serve --scheduler fixed --weight 37 --duration-s 1" + out) == 1);
    CHECK(run("dataset --window-s 0" + out) == 1);
}

TEST_CASE("cli: runtime errors exit 2") {
    TempDir dir;
    ranslice::e2::TcpListener squatter("127.0.0.1", 0);
    CHECK(run("serve --scheduler pf --transport tcp --duration-s 1 --port " + std::to_string(squatter.port()) +
              " --out " + dir.path().string()) == 2);
}

TEST_CASE("cli: dataset, train, eval and serve end to end") {
    TempDir dir;
    write(dir / "cfg.json", kSmall);
    const std::string base = "-q --seed 5 --config " + (dir / "cfg.json").string() + " --out " + dir.path().string();
    REQUIRE(run(base + " dataset") == 0);
    CHECK(data_lines(dir / "kpm.jsonl") == 90);
    CHECK(data_lines(dir / "delay_table.csv") == 1 + 9);

    REQUIRE(run(base + " train --training-date 2024-05-06 --table " + (dir / "delay_table.csv").string()) == 0);
    CHECK(data_lines(dir / "policy.csv") == 1 + 3);
    CHECK(data_lines(dir / "reward_trace.csv") == 1 + 8);
    REQUIRE(run(base + " train --episodes 5 --table " + (dir / "delay_table.csv").string()) == 0);
    CHECK(data_lines(dir / "reward_trace.csv") == 1 + 5);

    REQUIRE(run(base + " eval --policy " + (dir / "policy.csv").string()) == 0);
    CHECK(data_lines(dir / "results.csv") == 1 + 2 * 2 * 2);
    CHECK(std::filesystem::exists(dir / "latency.svg"));

    REQUIRE(run(base + " serve --duration-s 10 --policy " + (dir / "policy.csv").string()) == 0);
    CHECK(data_lines(dir / "serve_kpm.jsonl") == 100);
    REQUIRE(run(base + " serve --scheduler pf --transport tcp --port 0 --duration-s 1") == 0);
    CHECK(data_lines(dir / "serve_kpm.jsonl") == 10);
}
