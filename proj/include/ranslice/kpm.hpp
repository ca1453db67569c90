#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <json.hpp>

namespace ranslice {

// Per-slice measurements over one monitoring window.
struct SliceKpm {
    double arrival_mbps = 0.0;
    double served_mbps = 0.0;
    std::uint64_t dropped_bytes = 0;
    double mean_sdu_delay_ms = 0.0;
    double max_sdu_delay_ms = 0.0;
    // Raw counters behind the rates; they let a consumer re-check byte
    // conservation across a stream of windows.
    std::uint64_t arrived_bytes = 0;
    std::uint64_t served_bytes = 0;
    std::uint64_t queued_bytes = 0;  // occupancy at window end
    std::uint64_t sdu_count = 0;     // SDUs fully served in the window

    double loss_pct() const {
        return arrived_bytes == 0 ? 0.0 : 100.0 * static_cast<double>(dropped_bytes) / static_cast<double>(arrived_bytes);
    }

    bool operator==(const SliceKpm&) const = default;
};

struct KpmRecord {
    double window_start_ms = 0.0;
    double window_len_ms = 0.0;
    std::array<SliceKpm, 2> slices{};
    // Slice-1 weight in force at the end of the window; empty under PF.
    std::optional<double> active_weight_pct;

    bool operator==(const KpmRecord&) const = default;
};

// Throws ValidationError when window_len <= 0 or a delay is negative.
void validate(const KpmRecord& rec);

void to_json(nlohmann::json& j, const SliceKpm& s);
void from_json(const nlohmann::json& j, SliceKpm& s);
void to_json(nlohmann::json& j, const KpmRecord& r);
void from_json(const nlohmann::json& j, KpmRecord& r);

}  // namespace ranslice
