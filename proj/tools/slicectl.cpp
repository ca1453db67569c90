// slicectl: dataset sweep, offline DQN training, closed-loop evaluation and
// a live E2 serve loop for the two-slice RAN slicing testbed.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ranslice/config.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/pipeline.hpp"
#include "ranslice/xapps.hpp"

namespace fs = std::filesystem;
using namespace ranslice;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

template <class F>
auto read_file(const fs::path& path, F&& parse) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    return parse(in);
}

bool is_validation(const Error& e) {
    return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
           dynamic_cast<const IncompleteDatasetError*>(&e) || dynamic_cast<const PolicyError*>(&e) ||
           dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const IndexError*>(&e) ||
           dynamic_cast<const ModeError*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RAN slicing testbed: dataset, train, eval, serve"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool quiet = false;
    app.add_option("--config", config_path, "JSON config file (partial; defaults fill the rest)")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Run seed")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("-q,--quiet", quiet, "Only print errors");

    auto* ds = app.add_subcommand("dataset", "Run the (state x weight) sweep and build the delay table");
    std::optional<double> window_s, ds_period;
    ds->add_option("--window-s", window_s, "Simulated seconds per cell");
    ds->add_option("--kpm-period-ms", ds_period, "KPM reporting period");

    auto* tr = app.add_subcommand("train", "Train the DQN offline on a delay table");
    std::string table_path = "out/delay_table.csv";
    std::optional<std::size_t> episodes;
    std::string training_date;
    tr->add_option("--table", table_path, "Delay table CSV from `dataset`")->capture_default_str();
    tr->add_option("--episodes", episodes, "Override the episode count");
    tr->add_option("--training-date", training_date, "Date recorded in the policy (default: SOURCE_DATE_EPOCH or today)");

    auto* ev = app.add_subcommand("eval", "Closed-loop DRL vs PF over the evaluation scenarios");
    std::string policy_path = "out/policy.csv";
    std::optional<double> eval_duration;
    ev->add_option("--policy", policy_path, "Policy CSV from `train`")->capture_default_str();
    ev->add_option("--duration-s", eval_duration, "Simulated seconds per scenario");

    auto* sv = app.add_subcommand("serve", "Host the simulated gNB on the E2 bus with SM and RC xApps");
    std::string serve_policy;
    std::optional<std::string> scheduler, transport, host;
    std::optional<std::uint16_t> port;
    std::optional<double> serve_duration, pace, weight, slice1_rate;
    bool no_xapps = false;
    sv->add_option("--policy", serve_policy, "Policy CSV (needed for --scheduler drl)");
    sv->add_option("--scheduler", scheduler, "drl, pf or fixed")->check(CLI::IsMember({"drl", "pf", "fixed"}));
    sv->add_option("--weight", weight, "Slice-1 weight for --scheduler fixed");
    sv->add_option("--transport", transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
    sv->add_option("--host", host, "Bind address in tcp mode");
    sv->add_option("--port", port, "E2 port in tcp mode");
    sv->add_option("--duration-s", serve_duration, "Stop after this much simulated time (0: until interrupted)");
    sv->add_option("--pace", pace, "Simulated seconds per wall second (0: unpaced)");
    sv->add_option("--slice1-mbps", slice1_rate, "Slice-1 offered load");
    sv->add_flag("--no-xapps", no_xapps, "Only host the gNB endpoint; xApps connect externally");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    Logger log;
    if (!quiet) log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        const fs::path out = out_dir;

        if (*ds) {
            if (window_s) cfg.dataset.window_s = *window_s;
            if (ds_period) cfg.dataset.kpm_period_ms = *ds_period;
            cfg.validate();
            const auto res = run_dataset(cfg, seed, out, log);
            if (res.conservation_violations)
                std::fprintf(stderr, "dataset: %llu conservation violations\n",
                             static_cast<unsigned long long>(res.conservation_violations));
            if (!res.failed_cells.empty()) {
                std::fprintf(stderr, "dataset: %zu of %zu cells failed; no delay table written\n",
                             res.failed_cells.size(), res.cells);
                return kExitRuntime;
            }
            if (!quiet) std::printf("%s\n%s\n", res.store_path.c_str(), res.table_path.c_str());
        } else if (*tr) {
            if (episodes) cfg.dqn.episodes = *episodes;
            cfg.validate();
            const DelayTable table = read_file(table_path, [](std::istream& in) { return read_delay_table_csv(in); });
            const auto res = run_train(cfg, seed, table, out,
                                       training_date.empty() ? default_training_date() : training_date, log);
            if (!quiet) std::printf("%s\n%s\n%s\n", res.policy_path.c_str(), res.trace_path.c_str(), res.svg_path.c_str());
        } else if (*ev) {
            if (eval_duration) cfg.eval.duration_s = *eval_duration;
            cfg.validate();
            const TrainedPolicy policy = read_file(policy_path, [](std::istream& in) { return read_policy_csv(in); });
            const auto res = run_eval(cfg, seed, policy, out, log);
            if (!quiet) {
                std::printf("%s\n", res.results_path.c_str());
                for (const auto& f : res.figures) std::printf("%s\n", f.c_str());
            }
        } else if (*sv) {
            if (scheduler) cfg.serve.scheduler = *scheduler;
            if (weight) cfg.serve.fixed_weight_pct = *weight;
            if (transport) cfg.transport.mode = *transport;
            if (host) cfg.transport.host = *host;
            if (port) cfg.transport.port = *port;
            if (serve_duration) cfg.serve.duration_s = *serve_duration;
            if (pace) cfg.serve.pace = *pace;
            if (slice1_rate) cfg.serve.slice1_rate_mbps = *slice1_rate;
            if (no_xapps) cfg.serve.launch_xapps = false;
            cfg.validate();
            std::optional<TrainedPolicy> policy;
            if (!serve_policy.empty())
                policy = read_file(serve_policy, [](std::istream& in) { return read_policy_csv(in); });
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const auto res = run_serve(cfg, seed, policy, out, g_stop, log);
            if (!quiet) std::printf("%s\n", res.store_path.c_str());
        }
        return kExitOk;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return is_validation(e) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
