#pragma once

// The four slicectl phases as library calls: dataset sweep, offline
// training, closed-loop evaluation and the live E2 serve loop.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ranslice/config.hpp"
#include "ranslice/core.hpp"
#include "ranslice/xapps.hpp"

namespace ranslice {

using Logger = std::function<void(const std::string&)>;

// ---- dataset ---------------------------------------------------------------

struct DatasetOutcome {
    std::size_t cells = 0;
    std::size_t rows = 0;
    std::vector<std::string> failed_cells;
    // KPM boundaries where arrived != served + dropped + queued for a slice.
    std::uint64_t conservation_violations = 0;
    std::uint64_t boundaries_checked = 0;
    std::optional<DelayTable> table;  // empty when a cell failed
    std::filesystem::path store_path;
    std::filesystem::path table_path;
};

// Runs the (state x weight) sweep, one simulator per cell in parallel, and
// writes kpm.jsonl and delay_table.csv under `out_dir`.
DatasetOutcome run_dataset(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                           const Logger& log = {});

// ---- train -----------------------------------------------------------------

struct TrainOutcome {
    TrainedPolicy policy;
    std::vector<double> reward_trace;
    std::filesystem::path policy_path;
    std::filesystem::path trace_path;
    std::filesystem::path svg_path;
};

// Date recorded in the policy metadata: SOURCE_DATE_EPOCH when set (for
// reproducible artifacts), otherwise today, as YYYY-MM-DD in UTC.
std::string default_training_date();

TrainOutcome run_train(const RunConfig& cfg, std::uint64_t seed, const DelayTable& table,
                       const std::filesystem::path& out_dir, const std::string& training_date,
                       const Logger& log = {});

void write_reward_trace_csv(std::ostream& os, const std::vector<double>& trace, const nlohmann::json& meta);
std::vector<double> read_reward_trace_csv(std::istream& is);

// ---- eval ------------------------------------------------------------------

struct SliceResult {
    double arrival_mbps = 0.0;
    double departure_mbps = 0.0;
    double loss_pct = 0.0;
    double mean_delay_ms = 0.0;  // weighted by SDUs served
    double max_delay_ms = 0.0;
    std::uint64_t arrived_bytes = 0;
    std::uint64_t served_bytes = 0;
    std::uint64_t dropped_bytes = 0;
    std::uint64_t queued_bytes = 0;
};

struct ScenarioResult {
    std::size_t scenario = 0;
    std::string scheduler;  // "drl" or "pf"
    double slice1_rate_mbps = 0.0;
    double slice2_rate_mbps = 0.0;
    std::array<SliceResult, 2> slices{};
    std::optional<double> mean_weight_pct;
    std::size_t windows = 0;
    // Windows whose active weight differs from the policy's choice for the
    // previous window's measured state.
    std::size_t policy_mismatches = 0;
    std::uint64_t conservation_violations = 0;
};

// One closed-loop (policy set) or PF (policy empty) run of the eval plan.
// Rows go to `store` when given.
ScenarioResult run_scenario(const RunConfig& cfg, std::uint64_t seed, std::size_t scenario, double slice1_rate_mbps,
                            const std::optional<TrainedPolicy>& policy, std::vector<StoreRow>* rows = nullptr);

struct EvalOutcome {
    std::vector<ScenarioResult> results;  // scenario-major, drl before pf
    std::filesystem::path results_path;
    std::vector<std::filesystem::path> figures;
};

EvalOutcome run_eval(const RunConfig& cfg, std::uint64_t seed, const TrainedPolicy& policy,
                     const std::filesystem::path& out_dir, const Logger& log = {});

// One row per (scenario, scheduler, slice).
void write_results_csv(std::ostream& os, const std::vector<ScenarioResult>& results, const nlohmann::json& meta);

// ---- serve -----------------------------------------------------------------

struct ServeOutcome {
    std::uint64_t slots = 0;
    std::uint64_t indications = 0;
    std::size_t rows = 0;
    std::uint64_t controls_sent = 0;
    std::uint16_t port = 0;  // bound port in TCP mode
    std::filesystem::path store_path;
};

// Hosts the simulated gNB behind an E2 endpoint and, unless disabled, the SM
// and RC xApps. Runs until `stop` is set or serve.duration_s of simulated
// time has elapsed, then flushes the store. `on_ready` fires once the
// endpoint accepts connections (with the bound port in TCP mode).
ServeOutcome run_serve(const RunConfig& cfg, std::uint64_t seed, const std::optional<TrainedPolicy>& policy,
                       const std::filesystem::path& out_dir, const std::atomic<bool>& stop,
                       const Logger& log = {}, const std::function<void(std::uint16_t)>& on_ready = {});

}  // namespace ranslice
