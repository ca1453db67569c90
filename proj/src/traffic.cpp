#include "ranslice/traffic.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice {

void TrafficProfile::validate() const {
    if (!(mean_rate_mbps >= 0.0) || !std::isfinite(mean_rate_mbps))
        throw ConfigError("traffic rate must be non-negative");
    if (packet_bytes == 0) throw ConfigError("packet size must be positive");
    if (const auto* j = std::get_if<UniformPctJitter>(&jitter)) {
        if (!(j->pct >= 0.0 && j->pct <= 50.0)) throw ConfigError("jitter percentage must lie in [0, 50]");
    }
}

namespace {

// Cumulative packet count emitted before `slot`. With jitter the CBR line is
// displaced by at most amp packets per point, so per-slot counts move by up
// to +/- pct% while the count over any horizon stays within 1 + 2*amp
// packets of the exact rate. The sequence is non-decreasing for pct <= 50.
double cumulative_packets(double per_slot, double phase, double amp, std::uint64_t slot, std::uint64_t seed) {
    double displacement = 0.0;
    if (amp > 0.0) displacement = amp * (2.0 * unit_hash(seed, slot) - 1.0);
    return std::floor(static_cast<double>(slot) * per_slot + phase + displacement);
}

}  // namespace

std::uint64_t arrivals_for_slot(const TrafficProfile& profile, std::uint64_t slot_index, std::uint64_t rng_seed,
                                double slot_ms) {
    if (profile.mean_rate_mbps <= 0.0) return 0;
    const double per_slot =
        profile.mean_rate_mbps * 1e6 * (slot_ms / 1000.0) / (8.0 * static_cast<double>(profile.packet_bytes));
    const double phase = unit_hash(rng_seed, ~std::uint64_t{0});
    double amp = 0.0;
    if (const auto* j = std::get_if<UniformPctJitter>(&profile.jitter)) amp = 0.5 * j->pct / 100.0 * per_slot;
    const double hi = cumulative_packets(per_slot, phase, amp, slot_index + 1, rng_seed);
    const double lo = cumulative_packets(per_slot, phase, amp, slot_index, rng_seed);
    const double packets = hi - lo;
    return packets <= 0.0 ? 0 : static_cast<std::uint64_t>(packets) * profile.packet_bytes;
}

SweepPlan build_dataset_sweep(const QuantizerConfig& quant, const ActionSpace& space, double slice2_rate_mbps,
                              double window_s, double kpm_period_ms) {
    if (!(window_s > 0.0) || !(kpm_period_ms > 0.0)) throw ConfigError("sweep window and period must be positive");
    SweepPlan plan;
    plan.window_s = window_s;
    plan.kpm_period_ms = kpm_period_ms;
    for (double s : quant.grid())
        for (double w : space.weights()) plan.cells.push_back({s, slice2_rate_mbps, w});
    return plan;
}

SweepPlan build_eval_plan(double lo_mbps, double hi_mbps, double step_mbps, double slice2_rate_mbps,
                          double duration_s, double kpm_period_ms) {
    if (!(step_mbps > 0.0) || hi_mbps < lo_mbps) throw ConfigError("invalid evaluation rate range");
    if (!(duration_s > 0.0) || !(kpm_period_ms > 0.0)) throw ConfigError("evaluation duration must be positive");
    SweepPlan plan;
    plan.window_s = duration_s;
    plan.kpm_period_ms = kpm_period_ms;
    const auto n = std::llround((hi_mbps - lo_mbps) / step_mbps);
    for (long long k = 0; k <= n; ++k)
        plan.cells.push_back({lo_mbps + static_cast<double>(k) * step_mbps, slice2_rate_mbps, std::nullopt});
    return plan;
}

void write_plan_csv(std::ostream& os, const SweepPlan& plan) {
    os.precision(17);
    os << "# window_s=" << plan.window_s << ",kpm_period_ms=" << plan.kpm_period_ms << '\n';
    os << "slice1_rate_mbps,slice2_rate_mbps,weight_pct\n";
    for (const auto& c : plan.cells) {
        os << c.slice1_rate_mbps << ',' << c.slice2_rate_mbps << ',';
        if (c.weight_pct) os << *c.weight_pct;
        os << '\n';
    }
}

SweepPlan read_plan_csv(std::istream& is) {
    SweepPlan plan;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string kv;
            while (std::getline(meta, kv, ',')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                auto key = kv.substr(0, eq);
                key.erase(0, key.find_first_not_of(' '));
                const double v = std::stod(kv.substr(eq + 1));
                if (key == "window_s") plan.window_s = v;
                else if (key == "kpm_period_ms") plan.kpm_period_ms = v;
            }
            continue;
        }
        if (!header_seen) {
            if (line != "slice1_rate_mbps,slice2_rate_mbps,weight_pct")
                throw ValidationError("unexpected plan header: " + line);
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string a, b, c;
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        std::getline(row, c);
        try {
            SweepCell cell{std::stod(a), std::stod(b), std::nullopt};
            if (!c.empty()) cell.weight_pct = std::stod(c);
            plan.cells.push_back(cell);
        } catch (const std::exception&) {
            throw ValidationError("malformed plan row: " + line);
        }
    }
    if (!header_seen) throw ValidationError("plan file has no header");
    return plan;
}

}  // namespace ranslice
