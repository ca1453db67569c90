#pragma once

// Shared generators for the unit and acceptance tests.

#include <random>

#include "ranslice/core.hpp"
#include "ranslice/e2bus.hpp"

namespace fixtures {

inline ranslice::KpmRecord random_record(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> rate(0.0, 300.0);
    std::uniform_real_distribution<double> delay(0.0, 500.0);
    std::uniform_int_distribution<std::uint64_t> bytes(0, 1ULL << 40);
    ranslice::KpmRecord r;
    r.window_start_ms = std::uniform_real_distribution<double>(0.0, 1e7)(rng);
    r.window_len_ms = std::uniform_real_distribution<double>(0.5, 1000.0)(rng);
    for (auto& s : r.slices) {
        s.arrival_mbps = rate(rng);
        s.served_mbps = rate(rng);
        s.dropped_bytes = bytes(rng);
        s.mean_sdu_delay_ms = delay(rng);
        s.max_sdu_delay_ms = s.mean_sdu_delay_ms + delay(rng);
        s.arrived_bytes = bytes(rng);
        s.served_bytes = bytes(rng);
        s.queued_bytes = bytes(rng);
        s.sdu_count = bytes(rng);
    }
    if (rng() % 4) r.active_weight_pct = 10.0 + 5.0 * static_cast<double>(rng() % 17);
    return r;
}

inline ranslice::e2::Message random_message(std::mt19937_64& rng) {
    using namespace ranslice::e2;
    switch (rng() % 5) {
        case 0:
            return Subscribe{std::uniform_real_distribution<double>(0.5, 10'000.0)(rng)};
        case 1:
            return SubscribeAck{static_cast<std::uint32_t>(rng())};
        case 2:
            return Indication{static_cast<std::uint32_t>(rng()), random_record(rng)};
        case 3:
            return Control{10.0 + 5.0 * static_cast<double>(rng() % 17)};
        default:
            return ControlAck{(rng() & 1) != 0, rng() >> 12};
    }
}

}  // namespace fixtures
