#include "ranslice/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include "ranslice/dqn/train.hpp"
#include "ranslice/e2bus.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/gnb_endpoint.hpp"
#include "ranslice/numfmt.hpp"
#include "ranslice/ransim.hpp"
#include "ranslice/rng.hpp"
#include "ranslice/svg.hpp"
#include "ranslice/traffic.hpp"

namespace ranslice {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const Logger& log, const std::string& line) {
    if (log) log(line);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw StoreError("write to " + path.string() + " failed");
}

std::string cell_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%03zu", prefix, i);
    return buf;
}

// Checks arrived == served + dropped + queued on both slices.
struct ConservationCheck {
    std::uint64_t violations = 0;
    std::uint64_t checked = 0;

    void operator()(const GnbSim& sim, const KpmRecord&) {
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& q = sim.slice(s);
            if (q.arrived_bytes() != q.served_bytes() + q.dropped_bytes() + q.occupied_bytes()) ++violations;
        }
        ++checked;
    }
};

}  // namespace

DatasetOutcome run_dataset(const RunConfig& cfg, std::uint64_t seed, const fs::path& out_dir, const Logger& log) {
    cfg.validate();
    fs::create_directories(out_dir);
    const ActionSpace space = cfg.actions.build();
    const SweepPlan plan = build_dataset_sweep(cfg.quantizer, space, cfg.dataset.slice2_rate_mbps,
                                               cfg.dataset.window_s, cfg.dataset.kpm_period_ms);
    const std::size_t n = plan.cells.size();
    say(log, "dataset: " + std::to_string(n) + " cells, " + format_number(plan.window_s) + " s each");

    struct CellRun {
        std::vector<KpmRecord> records;
        ConservationCheck check;
        std::string error;
    };
    std::vector<CellRun> runs(n);

#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const auto& cell = plan.cells[static_cast<std::size_t>(i)];
        auto& run = runs[static_cast<std::size_t>(i)];
        try {
            ExperimentSpec spec;
            spec.gnb = cfg.gnb;
            spec.traffic = {cfg.traffic.profile(0, cell.slice1_rate_mbps),
                            cfg.traffic.profile(1, cell.slice2_rate_mbps)};
            spec.duration_s = plan.window_s;
            spec.kpm_period_ms = plan.kpm_period_ms;
            spec.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
            spec.space = space;
            run.records = run_experiment(spec, Weighted{*cell.weight_pct},
                                         [&run](const GnbSim& sim, const KpmRecord& r) { run.check(sim, r); });
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    }

    DatasetOutcome out;
    out.cells = n;
    out.store_path = out_dir / "kpm.jsonl";
    out.table_path = out_dir / "delay_table.csv";

    const json meta = output_meta(cfg, seed, "kpm_store");
    auto store = KpmStore::open(out.store_path, true);
    store.write_comment(meta);
    std::vector<StoreRow> rows;
    rows.reserve(n * (runs.empty() ? 0 : runs.front().records.size()));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = plan.cells[i];
        auto& run = runs[i];
        out.conservation_violations += run.check.violations;
        out.boundaries_checked += run.check.checked;
        if (!run.error.empty()) {
            out.failed_cells.push_back("(" + format_number(cell.slice1_rate_mbps) + " Mbps, " +
                                       format_number(*cell.weight_pct) + "%): " + run.error);
            continue;
        }
        const RunMeta rm{cell_id("cell", i), "weighted", cell.weight_pct, seed, cell.slice1_rate_mbps,
                         cell.slice2_rate_mbps};
        for (auto& rec : run.records) {
            StoreRow row{rm, std::move(rec)};
            store.append(row);
            rows.push_back(std::move(row));
        }
    }
    store.flush();
    out.rows = rows.size();
    for (const auto& f : out.failed_cells) say(log, "dataset: cell failed " + f);
    if (!out.failed_cells.empty()) return out;

    out.table = aggregate_delay_table(rows, cfg.quantizer, space);
    json table_meta = output_meta(cfg, seed, "delay_table");
    table_meta["window_s"] = plan.window_s;
    table_meta["kpm_period_ms"] = plan.kpm_period_ms;
    auto os = open_out(out.table_path);
    write_delay_table_csv(os, *out.table, table_meta);
    say(log, "dataset: " + std::to_string(out.rows) + " KPM rows, " + std::to_string(out.table->size()) +
                 " table cells");
    return out;
}

std::string default_training_date() {
    std::time_t t = std::time(nullptr);
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
        char* end = nullptr;
        const long long v = std::strtoll(sde, &end, 10);
        if (end && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[16];
    std::strftime(buf, sizeof(buf), "%Y-%m-%d", &tm);
    return buf;
}

void write_reward_trace_csv(std::ostream& os, const std::vector<double>& trace, const json& meta) {
    os << "# " << meta.dump() << "\n";
    os << "episode,mean_reward\n";
    for (std::size_t e = 0; e < trace.size(); ++e) os << (e + 1) << ',' << format_number(trace[e]) << '\n';
}

std::vector<double> read_reward_trace_csv(std::istream& is) {
    std::vector<double> trace;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "episode,mean_reward") throw ValidationError("unexpected reward trace header: " + line);
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("malformed reward trace row: " + line);
        trace.push_back(parse_number(std::string_view(line).substr(comma + 1)));
    }
    return trace;
}

namespace {

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += v[i];
    return to > from ? s / static_cast<double>(to - from) : 0.0;
}

std::string reward_svg(const std::vector<double>& trace) {
    svg::Series raw{"episode mean", {}, false};
    svg::Series smooth{"50-episode average", {}, false};
    double run = 0.0;
    for (std::size_t e = 0; e < trace.size(); ++e) {
        raw.points.emplace_back(static_cast<double>(e + 1), trace[e]);
        run += trace[e];
        if (e >= 50) run -= trace[e - 50];
        if (e + 1 >= 50) smooth.points.emplace_back(static_cast<double>(e + 1), run / 50.0);
    }
    svg::ChartSpec spec;
    spec.title = "DQN training reward";
    spec.x_label = "episode";
    spec.y_label = "mean reward per step";
    return svg::line_chart(spec, {raw, smooth});
}

}  // namespace

TrainOutcome run_train(const RunConfig& cfg, std::uint64_t seed, const DelayTable& table, const fs::path& out_dir,
                       const std::string& training_date, const Logger& log) {
    cfg.validate();
    fs::create_directories(out_dir);
    const ActionSpace space = cfg.actions.build();
    dqn::DatasetEnv env(table, cfg.quantizer, space, cfg.reward);
    dqn::DqnConfig dcfg = cfg.dqn;
    dcfg.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    auto result = dqn::train_offline(env, dcfg, [&](const dqn::EpisodeStats& s, const dqn::Mlp&, const dqn::Mlp&) {
        if ((s.episode + 1) % 100 != 0) return;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char buf[160];
        std::snprintf(buf, sizeof(buf), "train: episode %zu  eps %.3f  reward %.2f  loss %.2e  (%.0f s)",
                      s.episode + 1, s.epsilon, s.mean_reward, s.mean_loss, secs);
        say(log, buf);
    });

    TrainOutcome out;
    out.policy = dqn::extract_policy(result.net, cfg.quantizer, space, dcfg.backend);
    out.reward_trace = std::move(result.reward_trace);
    out.policy_path = out_dir / "policy.csv";
    out.trace_path = out_dir / "reward_trace.csv";
    out.svg_path = out_dir / "reward.svg";

    const std::size_t n = out.reward_trace.size();
    const std::size_t k = std::min<std::size_t>(100, n);
    json meta = output_meta(cfg, seed, "policy");
    meta["training_date"] = training_date;
    meta["layer_dims"] = result.net.dims();
    meta["episodes"] = dcfg.episodes;
    meta["first100_mean_reward"] = mean_of(out.reward_trace, 0, k);
    meta["final100_mean_reward"] = mean_of(out.reward_trace, n - k, n);
    {
        auto os = open_out(out.policy_path);
        write_policy_csv(os, out.policy, meta);
    }
    {
        auto os = open_out(out.trace_path);
        write_reward_trace_csv(os, out.reward_trace, output_meta(cfg, seed, "reward_trace"));
    }
    write_text(out.svg_path, reward_svg(out.reward_trace));
    return out;
}

ScenarioResult run_scenario(const RunConfig& cfg, std::uint64_t seed, std::size_t scenario, double slice1_rate_mbps,
                            const std::optional<TrainedPolicy>& policy, std::vector<StoreRow>* rows) {
    const ActionSpace space = cfg.actions.build();
    ExperimentSpec spec;
    spec.gnb = cfg.gnb;
    spec.traffic = {cfg.traffic.profile(0, slice1_rate_mbps), cfg.traffic.profile(1, cfg.eval.slice2_rate_mbps)};
    spec.duration_s = cfg.eval.duration_s;
    spec.kpm_period_ms = cfg.eval.kpm_period_ms;
    // DRL and PF runs of one scenario see the same traffic.
    spec.seed = derive_seed(seed, 10'000 + scenario);
    spec.space = space;

    Scheduling sched = ProportionalFair{};
    std::optional<RcXapp> rc;
    if (policy) {
        rc.emplace(*policy, cfg.quantizer, space, EmitMode::kChangeOnly);
        sched = ClosedLoop{[&rc](const KpmRecord& r) -> std::optional<double> {
                               if (auto ctl = rc->on_state(r.slices[0].arrival_mbps)) return ctl->weight_pct;
                               return std::nullopt;
                           },
                           cfg.eval.initial_weight_pct};
    }
    ConservationCheck check;
    const auto records =
        run_experiment(spec, sched, [&check](const GnbSim& sim, const KpmRecord& r) { check(sim, r); });

    ScenarioResult res;
    res.scenario = scenario;
    res.scheduler = policy ? "drl" : "pf";
    res.slice1_rate_mbps = slice1_rate_mbps;
    res.slice2_rate_mbps = cfg.eval.slice2_rate_mbps;
    res.windows = records.size();
    res.conservation_violations = check.violations;

    const double duration_s = static_cast<double>(records.size()) * spec.kpm_period_ms / 1000.0;
    for (std::size_t s = 0; s < 2; ++s) {
        auto& out = res.slices[s];
        double delay_weighted = 0.0;
        std::uint64_t sdus = 0;
        for (const auto& r : records) {
            const auto& k = r.slices[s];
            out.arrived_bytes += k.arrived_bytes;
            out.served_bytes += k.served_bytes;
            out.dropped_bytes += k.dropped_bytes;
            out.max_delay_ms = std::max(out.max_delay_ms, k.max_sdu_delay_ms);
            delay_weighted += k.mean_sdu_delay_ms * static_cast<double>(k.sdu_count);
            sdus += k.sdu_count;
        }
        out.queued_bytes = records.empty() ? 0 : records.back().slices[s].queued_bytes;
        out.arrival_mbps = static_cast<double>(out.arrived_bytes) * 8.0 / duration_s / 1e6;
        out.departure_mbps = static_cast<double>(out.served_bytes) * 8.0 / duration_s / 1e6;
        out.loss_pct = out.arrived_bytes
                           ? 100.0 * static_cast<double>(out.dropped_bytes) / static_cast<double>(out.arrived_bytes)
                           : 0.0;
        out.mean_delay_ms = sdus ? delay_weighted / static_cast<double>(sdus) : 0.0;
    }

    if (policy) {
        double wsum = 0.0;
        for (std::size_t k = 0; k < records.size(); ++k) {
            wsum += records[k].active_weight_pct.value_or(0.0);
            if (k == 0) continue;
            const double state =
                quantize_arrival_rate(std::max(0.0, records[k - 1].slices[0].arrival_mbps), cfg.quantizer)
                    .quantized_rate_mbps;
            if (records[k].active_weight_pct != policy->lookup(state)) ++res.policy_mismatches;
        }
        res.mean_weight_pct = records.empty() ? 0.0 : wsum / static_cast<double>(records.size());
    }

    if (rows) {
        RunMeta meta{cell_id("eval", scenario) + "-" + res.scheduler, res.scheduler, std::nullopt, seed,
                     slice1_rate_mbps, cfg.eval.slice2_rate_mbps};
        for (const auto& r : records) rows->push_back({meta, r});
    }
    return res;
}

void write_results_csv(std::ostream& os, const std::vector<ScenarioResult>& results, const json& meta) {
    os << "# " << meta.dump() << "\n";
    os << "scenario,scheduler,slice,slice1_rate_mbps,slice2_rate_mbps,arrival_mbps,departure_mbps,loss_pct,"
          "mean_delay_ms,max_delay_ms,arrived_bytes,served_bytes,dropped_bytes,queued_bytes,mean_weight_pct\n";
    for (const auto& r : results) {
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& k = r.slices[s];
            os << r.scenario << ',' << r.scheduler << ',' << (s + 1) << ',' << format_number(r.slice1_rate_mbps) << ','
               << format_number(r.slice2_rate_mbps) << ',' << format_number(k.arrival_mbps) << ','
               << format_number(k.departure_mbps) << ',' << format_number(k.loss_pct) << ','
               << format_number(k.mean_delay_ms) << ',' << format_number(k.max_delay_ms) << ',' << k.arrived_bytes
               << ',' << k.served_bytes << ',' << k.dropped_bytes << ',' << k.queued_bytes << ','
               << (r.mean_weight_pct ? format_number(*r.mean_weight_pct) : "") << '\n';
        }
    }
}

namespace {

std::string metric_svg(const std::vector<ScenarioResult>& results, const std::string& title,
                       const std::string& y_label, double SliceResult::*field, std::optional<double> reference,
                       const std::string& reference_label) {
    std::vector<svg::Series> series;
    for (const char* sched : {"drl", "pf"}) {
        for (std::size_t s = 0; s < 2; ++s) {
            svg::Series line{std::string(sched == std::string("drl") ? "DRL" : "PF") + "-S" + std::to_string(s + 1),
                             {}, true};
            for (const auto& r : results)
                if (r.scheduler == sched) line.points.emplace_back(r.slice1_rate_mbps, r.slices[s].*field);
            series.push_back(std::move(line));
        }
    }
    svg::ChartSpec spec;
    spec.title = title;
    spec.x_label = "Slice-1 traffic arrival rate (Mbps)";
    spec.y_label = y_label;
    spec.reference_y = reference;
    spec.reference_label = reference_label;
    return svg::line_chart(spec, series);
}

}  // namespace

EvalOutcome run_eval(const RunConfig& cfg, std::uint64_t seed, const TrainedPolicy& policy, const fs::path& out_dir,
                     const Logger& log) {
    cfg.validate();
    const ActionSpace space = cfg.actions.build();
    if (!policy.covers(cfg.quantizer, space))
        throw PolicyError("policy does not cover every state with an in-space weight");
    fs::create_directories(out_dir);
    const SweepPlan plan = build_eval_plan(cfg.eval.slice1_min_mbps, cfg.eval.slice1_max_mbps,
                                           cfg.eval.slice1_step_mbps, cfg.eval.slice2_rate_mbps,
                                           cfg.eval.duration_s, cfg.eval.kpm_period_ms);
    const std::size_t jobs = plan.cells.size() * 2;
    say(log, "eval: " + std::to_string(plan.cells.size()) + " scenarios x {drl, pf}, " +
                 format_number(cfg.eval.duration_s) + " s each");

    std::vector<ScenarioResult> results(jobs);
    std::vector<std::vector<StoreRow>> rows(jobs);
    std::vector<std::exception_ptr> errors(jobs);
#pragma omp parallel for schedule(dynamic)
    for (long j = 0; j < static_cast<long>(jobs); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const std::size_t scenario = ju / 2;
        try {
            results[ju] = run_scenario(cfg, seed, scenario, plan.cells[scenario].slice1_rate_mbps,
                                       ju % 2 == 0 ? std::optional<TrainedPolicy>(policy) : std::nullopt, &rows[ju]);
        } catch (...) {
            errors[ju] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    EvalOutcome out;
    out.results = std::move(results);
    out.results_path = out_dir / "results.csv";
    {
        auto os = open_out(out.results_path);
        write_results_csv(os, out.results, output_meta(cfg, seed, "eval_results"));
    }
    auto store = KpmStore::open(out_dir / "eval_kpm.jsonl", true);
    store.write_comment(output_meta(cfg, seed, "kpm_store"));
    for (auto& per_job : rows)
        for (auto& row : per_job) store.append(std::move(row));
    store.flush();

    const std::vector<std::pair<std::string, std::string>> figs = {
        {"loss.svg", metric_svg(out.results, "Packet loss", "packet loss (%)", &SliceResult::loss_pct, std::nullopt, "")},
        {"latency.svg", metric_svg(out.results, "Mean SDU latency", "latency (ms)", &SliceResult::mean_delay_ms,
                                   cfg.reward.delay_threshold_ms, "delay threshold")},
        {"throughput.svg", metric_svg(out.results, "Departure rate", "departure rate (Mbps)",
                                      &SliceResult::departure_mbps, std::nullopt, "")},
    };
    for (const auto& [name, text] : figs) {
        write_text(out_dir / name, text);
        out.figures.push_back(out_dir / name);
    }
    for (const auto& r : out.results) {
        char buf[200];
        std::snprintf(buf, sizeof(buf), "eval: S1=%5.1f %-3s  loss %.3f%% / %.3f%%  delay %.2f / %.2f ms",
                      r.slice1_rate_mbps, r.scheduler.c_str(), r.slices[0].loss_pct, r.slices[1].loss_pct,
                      r.slices[0].mean_delay_ms, r.slices[1].mean_delay_ms);
        say(log, buf);
    }
    return out;
}

ServeOutcome run_serve(const RunConfig& cfg, std::uint64_t seed, const std::optional<TrainedPolicy>& policy,
                       const fs::path& out_dir, const std::atomic<bool>& stop, const Logger& log,
                       const std::function<void(std::uint16_t)>& on_ready) {
    cfg.validate();
    const auto& sc = cfg.serve;
    const ActionSpace space = cfg.actions.build();

    PolicyHandle handle = PfMarker{};
    SchedulerMode mode = ProportionalFair{};
    std::optional<double> meta_weight;
    if (sc.scheduler == "drl") {
        if (!policy) throw ValidationError("serve --scheduler drl needs a policy file");
        handle = *policy;
        mode = Weighted{cfg.eval.initial_weight_pct};
    } else if (sc.scheduler == "fixed") {
        handle = FixedWeight{sc.fixed_weight_pct};
        mode = Weighted{sc.fixed_weight_pct};
        meta_weight = sc.fixed_weight_pct;
    }

    fs::create_directories(out_dir);
    ServeOutcome out;
    out.store_path = out_dir / "serve_kpm.jsonl";
    auto store = KpmStore::open(out.store_path, true);
    store.write_comment(output_meta(cfg, seed, "kpm_store"));

    GnbSim sim(cfg.gnb, mode, space);
    GnbEndpoint endpoint(sim, {cfg.traffic.profile(0, sc.slice1_rate_mbps), cfg.traffic.profile(1, sc.slice2_rate_mbps)},
                         seed);
    endpoint.set_logger([&log](const std::string& line) { say(log, "gnb: " + line); });

    SmXapp sm(store, RunMeta{"serve", sc.scheduler, meta_weight, seed, sc.slice1_rate_mbps, sc.slice2_rate_mbps});
    RcXapp rc(handle, cfg.quantizer, space, EmitMode::kChangeOnly);

    const double slot_ms = cfg.gnb.slot_ms();
    const std::uint64_t max_slots =
        sc.duration_s > 0.0 ? static_cast<std::uint64_t>(std::llround(sc.duration_s * 1000.0 / slot_ms)) : 0;
    const auto wall_start = std::chrono::steady_clock::now();
    auto pace = [&](std::uint64_t slot) {
        if (sc.pace <= 0.0) return;
        const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          std::chrono::duration<double, std::milli>(slot * slot_ms / sc.pace));
        std::this_thread::sleep_until(due);
    };
    auto keep_running = [&] { return !stop.load() && (max_slots == 0 || endpoint.slot_index() < max_slots); };

    if (cfg.transport.mode == "inproc") {
        std::optional<XappHost> host;
        if (sc.launch_xapps) {
            host.emplace(endpoint.connect_inproc(), sm, &rc);
            host->subscribe(sc.kpm_period_ms);
        }
        if (on_ready) on_ready(0);
        // Lockstep: every message produced in a slot is handled before the
        // next one, so controls land exactly one slot after their indication.
        while (keep_running()) {
            endpoint.step();
            if (host) host->pump();
            pace(endpoint.slot_index());
        }
        if (host) host->pump();
    } else {
        e2::TcpListener listener(cfg.transport.host, cfg.transport.port);
        out.port = listener.port();
        say(log, "serve: E2 endpoint listening on " + cfg.transport.host + ":" + std::to_string(out.port));
        std::atomic<bool> done{false};
        std::thread acceptor([&] {
            while (!done.load()) {
                try {
                    if (auto ch = listener.accept_for(std::chrono::milliseconds(100))) {
                        endpoint.attach(std::move(ch));
                        say(log, "serve: xApp connected");
                    }
                } catch (const TransportError& e) {
                    if (!done.load()) say(log, std::string("serve: accept failed: ") + e.what());
                    return;
                }
            }
        });
        std::thread xapps;
        std::exception_ptr xapp_error;
        if (sc.launch_xapps) {
            xapps = std::thread([&] {
                try {
                    XappHost host(e2::connect_tcp(cfg.transport.host, out.port, space), sm, &rc);
                    host.subscribe(sc.kpm_period_ms);
                    while (!done.load() && host.connected()) host.pump_for(std::chrono::milliseconds(20));
                    while (host.pump_for(std::chrono::milliseconds(200))) {
                    }
                } catch (...) {
                    xapp_error = std::current_exception();
                }
            });
            // Do not start the clock until the SM xApp is subscribed.
            const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
            while (endpoint.subscription_count() == 0 && std::chrono::steady_clock::now() < deadline && !stop.load()) {
                endpoint.poll();
                std::this_thread::sleep_for(std::chrono::milliseconds(1));
            }
        }
        if (on_ready) on_ready(out.port);
        while (keep_running()) {
            endpoint.step();
            pace(endpoint.slot_index());
        }
        // Let the xApps drain what is in flight before shutting down.
        const auto drain_until = std::chrono::steady_clock::now() + std::chrono::seconds(2);
        while (sc.launch_xapps && store.size() < endpoint.indications_sent() &&
               std::chrono::steady_clock::now() < drain_until) {
            endpoint.poll();
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        done = true;
        listener.close();
        acceptor.join();
        if (xapps.joinable()) xapps.join();
        if (xapp_error) std::rethrow_exception(xapp_error);
    }

    store.flush();
    out.slots = endpoint.slot_index();
    out.indications = endpoint.indications_sent();
    out.rows = store.size();
    out.controls_sent = rc.controls_sent();
    say(log, "serve: stopped after " + format_number(static_cast<double>(out.slots) * slot_ms / 1000.0) +
                 " simulated s, " + std::to_string(out.rows) + " KPM rows stored");
    return out;
}

}  // namespace ranslice
