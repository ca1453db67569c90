#pragma once

// iperf-like downlink traffic and the experiment plans built from it.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ranslice/core.hpp"

namespace ranslice {

struct NoJitter {
    bool operator==(const NoJitter&) const = default;
};

// Per-slot rate wobble of up to +/- pct percent; the long-run rate is exact.
struct UniformPctJitter {
    double pct = 2.0;
    bool operator==(const UniformPctJitter&) const = default;
};

using JitterModel = std::variant<NoJitter, UniformPctJitter>;

struct TrafficProfile {
    double mean_rate_mbps = 0.0;
    std::uint32_t packet_bytes = 1500;
    JitterModel jitter = NoJitter{};

    void validate() const;
};

// Bytes offered in `slot_index`. Constant-bit-rate packetization with a
// seed-dependent phase; a stateless function of (profile, slot, seed).
std::uint64_t arrivals_for_slot(const TrafficProfile& profile, std::uint64_t slot_index,
                                std::uint64_t rng_seed, double slot_ms = 0.5);

struct SweepCell {
    double slice1_rate_mbps = 0.0;
    double slice2_rate_mbps = 0.0;
    std::optional<double> weight_pct;  // empty in evaluation plans

    bool operator==(const SweepCell&) const = default;
};

struct SweepPlan {
    std::vector<SweepCell> cells;
    double window_s = 30.0;
    double kpm_period_ms = 100.0;

    bool operator==(const SweepPlan&) const = default;
};

// Every (grid state, weight) pair with slice 2 held at `slice2_rate_mbps`.
SweepPlan build_dataset_sweep(const QuantizerConfig& quant, const ActionSpace& space,
                              double slice2_rate_mbps, double window_s, double kpm_period_ms = 100.0);

// Slice-1 rates lo..hi by step against a constant slice 2; no weight axis.
SweepPlan build_eval_plan(double lo_mbps, double hi_mbps, double step_mbps, double slice2_rate_mbps,
                          double duration_s, double kpm_period_ms = 100.0);

// CSV: `# window_s=..,kpm_period_ms=..` then
// `slice1_rate_mbps,slice2_rate_mbps,weight_pct` rows (empty weight in eval plans).
void write_plan_csv(std::ostream& os, const SweepPlan& plan);
SweepPlan read_plan_csv(std::istream& is);

}  // namespace ranslice
