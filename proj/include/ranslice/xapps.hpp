#pragma once

// Slice-Monitoring and Resource-Control xApps plus the KPM store they share.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ranslice/core.hpp"
#include "ranslice/e2bus.hpp"
#include "ranslice/kpm.hpp"

namespace ranslice {

struct RunMeta {
    std::string scenario_id;
    std::string scheduler;  // "weighted", "pf" or "drl"
    std::optional<double> weight_pct;
    std::uint64_t seed = 0;
    double slice1_rate_mbps = 0.0;
    double slice2_rate_mbps = 0.0;

    bool operator==(const RunMeta&) const = default;
};

struct StoreRow {
    RunMeta meta;
    KpmRecord record;

    bool operator==(const StoreRow&) const = default;
};

void to_json(nlohmann::json& j, const RunMeta& m);
void from_json(const nlohmann::json& j, RunMeta& m);
void to_json(nlohmann::json& j, const StoreRow& r);
void from_json(const nlohmann::json& j, StoreRow& r);

// Append-only KPM log, in memory or backed by a JSONL file. One writer and
// any number of concurrent readers.
class KpmStore {
public:
    static KpmStore in_memory();
    // Loads existing rows (unless `truncate`) and appends after them.
    // Lines starting with '#' are metadata and are skipped.
    static KpmStore open(const std::filesystem::path& path, bool truncate = false);

    KpmStore(KpmStore&&) noexcept;
    KpmStore& operator=(KpmStore&&) noexcept;
    ~KpmStore();

    // Returns the new row's index. Throws StoreError on I/O failure.
    std::size_t append(StoreRow row);
    // Writes a `# <json>` metadata line to the file (no-op in memory).
    void write_comment(const nlohmann::json& meta);
    void flush();

    std::size_t size() const;
    std::vector<StoreRow> rows() const;
    std::vector<StoreRow> query(const std::function<bool(const StoreRow&)>& pred) const;

    const std::optional<std::filesystem::path>& path() const { return path_; }

private:
    KpmStore() = default;

    std::unique_ptr<std::shared_mutex> mu_ = std::make_unique<std::shared_mutex>();
    std::vector<StoreRow> rows_;
    std::optional<std::filesystem::path> path_;
    std::ofstream out_;
};

// Mean slice-1 statistics per (quantized state, weight) over weighted rows.
// Throws IncompleteDatasetError naming the first uncovered cell. The result
// does not depend on row order.
DelayTable aggregate_delay_table(const std::vector<StoreRow>& rows, const QuantizerConfig& quant,
                                 const ActionSpace& space);

// `# <meta json>` line, then
// state_mbps,weight_pct,mean_delay_ms,mean_loss_pct,mean_served_mbps
void write_delay_table_csv(std::ostream& os, const DelayTable& table, const nlohmann::json& meta);
DelayTable read_delay_table_csv(std::istream& is, nlohmann::json* meta = nullptr);

// `# <meta json>` line, then state_mbps,weight_pct
void write_policy_csv(std::ostream& os, const TrainedPolicy& policy, const nlohmann::json& meta);
TrainedPolicy read_policy_csv(std::istream& is, nlohmann::json* meta = nullptr);

struct FixedWeight {
    double weight_pct = 50.0;
};
struct PfMarker {};

using PolicyHandle = std::variant<TrainedPolicy, FixedWeight, PfMarker>;

class SmXapp {
public:
    SmXapp(KpmStore& store, RunMeta meta) : store_(store), meta_(std::move(meta)) {}

    // Persists the window; returns the row index.
    std::size_t on_indication(const KpmRecord& record);

    std::optional<double> last_arrival_mbps() const { return last_arrival_; }
    std::size_t rows_written() const { return rows_written_; }

private:
    KpmStore& store_;
    RunMeta meta_;
    std::optional<double> last_arrival_;
    std::size_t rows_written_ = 0;
};

enum class EmitMode {
    kChangeOnly,
    kAlways,
};

class RcXapp {
public:
    RcXapp(PolicyHandle policy, QuantizerConfig quant, ActionSpace space = ActionSpace(),
           EmitMode mode = EmitMode::kChangeOnly);

    // Control to send for a measured slice-1 arrival rate, or nothing.
    // Throws PolicyError when the policy has no entry for the state.
    std::optional<e2::Control> on_state(double measured_mbps);

    // The weight the policy picks for a measurement, without side effects.
    std::optional<double> decide(double measured_mbps) const;

    void on_ack(const e2::ControlAck& ack);

    bool enabled() const { return !std::holds_alternative<PfMarker>(policy_); }
    std::optional<double> last_sent() const { return last_sent_; }
    std::uint64_t controls_sent() const { return controls_sent_; }
    std::uint64_t rejected() const { return rejected_; }

private:
    PolicyHandle policy_;
    QuantizerConfig quant_;
    ActionSpace space_;
    EmitMode mode_;
    std::optional<double> last_sent_;
    std::uint64_t controls_sent_ = 0;
    std::uint64_t rejected_ = 0;
};

// Runs SM and RC against one E2 channel: subscribes, stores every indication
// and feeds the measured slice-1 arrival rate to the RC.
class XappHost {
public:
    XappHost(std::shared_ptr<e2::Channel> channel, SmXapp& sm, RcXapp* rc);

    void subscribe(double report_period_ms);
    // Handles queued messages without blocking; returns how many.
    std::size_t pump();
    // Blocks up to `timeout` for one message.
    bool pump_for(std::chrono::milliseconds timeout);

    std::optional<std::uint32_t> subscription_id() const { return subscription_; }
    bool connected() const { return channel_->is_open(); }

private:
    void handle(const e2::Message& msg);

    std::shared_ptr<e2::Channel> channel_;
    SmXapp& sm_;
    RcXapp* rc_;
    std::optional<std::uint32_t> subscription_;
};

}  // namespace ranslice
