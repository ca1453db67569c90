#pragma once

// Slot-level model of a two-slice gNB: per-slice SDU queues with drop-tail
// buffers, a linear PRB capacity model, and either a fixed-weight split or a
// proportional-fair scheduler. One instance is a single-threaded state
// machine; independent instances can run on different threads.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "ranslice/core.hpp"
#include "ranslice/kpm.hpp"
#include "ranslice/traffic.hpp"

namespace ranslice {

struct GnbConfig {
    int n_prb = 106;
    double scs_khz = 30.0;
    // 7.4 bit/RE puts the 106-PRB cell at ~244.7 Mbps.
    double spectral_efficiency = 7.4;
    int data_re_per_prb_slot = 156;  // 12 subcarriers x 13 data symbols
    std::uint64_t buffer_bytes_per_slice = 2'000'000;
    std::uint32_t sdu_bytes = 1500;
    double pf_alpha = 0.01;

    void validate() const;
    double slot_ms() const { return 1.0 / (scs_khz / 15.0); }
    double slots_per_second() const { return 1000.0 / slot_ms(); }
};

std::uint64_t slice_capacity_bits(int prbs, const GnbConfig& cfg);

// Slice 1 gets floor(weight/100 * n_prb); slice 2 the remainder.
std::pair<int, int> allocate_weighted(double weight_pct, int n_prb);

struct Weighted {
    double weight_pct = 50.0;
    bool operator==(const Weighted&) const = default;
};
struct ProportionalFair {
    bool operator==(const ProportionalFair&) const = default;
};
using SchedulerMode = std::variant<Weighted, ProportionalFair>;

class SliceQueue {
public:
    struct Served {
        std::uint64_t bytes = 0;
        std::uint64_t sdus = 0;
        double delay_sum_ms = 0.0;
        double delay_max_ms = 0.0;
    };

    // Splits `bytes` into SDUs; each SDU that does not fit is dropped whole.
    // Returns the number of bytes dropped.
    std::uint64_t enqueue(std::uint64_t bytes, std::uint64_t slot, std::uint64_t limit_bytes,
                          std::uint32_t sdu_bytes);

    // FIFO service of up to `capacity_bytes`. An SDU may be served across
    // several slots; its delay is taken when its last byte leaves.
    Served serve(std::uint64_t capacity_bytes, std::uint64_t slot, double slot_ms);

    std::uint64_t occupied_bytes() const { return occupied_; }
    bool backlogged() const { return occupied_ > 0; }

    std::uint64_t arrived_bytes() const { return arrived_; }
    std::uint64_t served_bytes() const { return served_; }
    std::uint64_t dropped_bytes() const { return dropped_; }
    double delay_sum_ms() const { return delay_sum_; }
    std::uint64_t delay_count() const { return delay_count_; }
    double delay_max_ms() const { return delay_max_; }
    double min_delay_seen_ms() const { return delay_min_; }

private:
    struct Sdu {
        std::uint32_t bytes;
        std::uint32_t remaining;
        std::uint64_t enqueue_slot;
    };

    std::deque<Sdu> fifo_;
    std::uint64_t occupied_ = 0;
    std::uint64_t arrived_ = 0, served_ = 0, dropped_ = 0;
    double delay_sum_ = 0.0;
    std::uint64_t delay_count_ = 0;
    double delay_max_ = 0.0;
    double delay_min_ = 0.0;
};

struct SliceSlotReport {
    std::uint64_t arrived_bytes = 0;
    std::uint64_t dropped_bytes = 0;
    std::uint64_t served_bytes = 0;
    std::uint64_t sdus_completed = 0;
    double delay_sum_ms = 0.0;
    double delay_max_ms = 0.0;
    int prbs = 0;

    bool operator==(const SliceSlotReport&) const = default;
};

struct SlotReport {
    std::uint64_t slot_index = 0;
    std::array<SliceSlotReport, 2> slices{};

    bool operator==(const SlotReport&) const = default;
};

// Folds slot reports into one KPM window.
class KpmAccumulator {
public:
    void add(const SlotReport& rep);
    // Emits the window ending now and starts a new one at `end_slot`.
    KpmRecord take(std::uint64_t end_slot, double slot_ms, const std::array<std::uint64_t, 2>& queued_bytes,
                   std::optional<double> active_weight_pct);
    void restart(std::uint64_t start_slot);

private:
    std::uint64_t start_slot_ = 0;
    std::array<SliceSlotReport, 2> sum_{};
};

// PRB split for the current slot under proportional fairness. The backlogged
// slice with the largest achievable-rate / average-throughput ratio takes the
// whole slot; achievable rate is the slot capacity capped by the backlog.
std::pair<int, int> allocate_pf(const std::array<std::uint64_t, 2>& backlog_bytes,
                                const std::array<double, 2>& avg_bits, const GnbConfig& cfg);

class GnbSim {
public:
    explicit GnbSim(GnbConfig cfg, SchedulerMode mode = Weighted{},
                    ActionSpace space = ActionSpace());

    SlotReport step_slot(const std::array<std::uint64_t, 2>& arrivals_bytes);

    // Takes effect at the next slot. Throws ModeError under PF and
    // ValidationError for weights outside the action space.
    void apply_control(double weight_pct);
    void set_scheduler(SchedulerMode mode);

    std::pair<int, int> next_allocation() const;

    // KPM record for the slots since the previous call.
    KpmRecord take_window();
    std::array<std::uint64_t, 2> queued_bytes() const;
    std::optional<double> active_weight() const;

    const GnbConfig& config() const { return cfg_; }
    const SchedulerMode& scheduler() const { return mode_; }
    const SliceQueue& slice(std::size_t i) const { return slices_.at(i); }
    std::uint64_t slot_index() const { return slot_; }
    const std::array<double, 2>& pf_avg_bits() const { return pf_avg_; }

private:
    GnbConfig cfg_;
    SchedulerMode mode_;
    ActionSpace space_;
    std::array<SliceQueue, 2> slices_{};
    std::array<double, 2> pf_avg_{};
    std::uint64_t slot_ = 0;
    KpmAccumulator window_;
};

std::pair<int, int> allocate_pf(const GnbSim& sim, const GnbConfig& cfg);

// Returns the next slice-1 weight after a window, or nothing to keep the
// current one.
using WindowController = std::function<std::optional<double>(const KpmRecord&)>;

struct ClosedLoop {
    WindowController controller;
    double initial_weight_pct = 50.0;
};

using Scheduling = std::variant<Weighted, ProportionalFair, ClosedLoop>;

struct ExperimentSpec {
    GnbConfig gnb;
    std::array<TrafficProfile, 2> traffic{};
    double duration_s = 120.0;
    double kpm_period_ms = 100.0;
    std::uint64_t seed = 1;
    ActionSpace space;
};

// Called after every window with the simulator state at the boundary.
using BoundaryObserver = std::function<void(const GnbSim&, const KpmRecord&)>;

std::vector<KpmRecord> run_experiment(const ExperimentSpec& spec, const Scheduling& sched,
                                      const BoundaryObserver& observer = {});

// Slots per KPM window; throws ConfigError unless the period is a positive
// whole number of slots.
std::uint64_t slots_per_window(const GnbConfig& cfg, double kpm_period_ms);

}  // namespace ranslice
