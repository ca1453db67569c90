#include "ranslice/ransim.hpp"

#include <algorithm>
#include <cmath>

#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice {

namespace {

// Keeps the PF ratio finite after long idle stretches.
constexpr double kMinPfAverageBits = 1.0;

double to_mbps(std::uint64_t bytes, double window_ms) {
    return static_cast<double>(bytes) * 8.0 / (window_ms * 1000.0);
}

}  // namespace

void GnbConfig::validate() const {
    if (n_prb <= 0) throw ConfigError("n_prb must be positive");
    if (!(scs_khz > 0.0)) throw ConfigError("subcarrier spacing must be positive");
    if (!(spectral_efficiency > 0.0)) throw ConfigError("spectral efficiency must be positive");
    if (data_re_per_prb_slot <= 0) throw ConfigError("resource elements per PRB must be positive");
    if (buffer_bytes_per_slice == 0) throw ConfigError("slice buffer must be non-empty");
    if (sdu_bytes == 0) throw ConfigError("SDU size must be positive");
    if (!(pf_alpha > 0.0 && pf_alpha <= 1.0)) throw ConfigError("PF averaging factor must lie in (0, 1]");
}

std::uint64_t slice_capacity_bits(int prbs, const GnbConfig& cfg) {
    if (prbs < 0 || prbs > cfg.n_prb) throw IndexError("PRB count outside the carrier");
    return static_cast<std::uint64_t>(
        std::floor(static_cast<double>(prbs) * cfg.data_re_per_prb_slot * cfg.spectral_efficiency));
}

std::pair<int, int> allocate_weighted(double weight_pct, int n_prb) {
    // Small epsilon so that e.g. 55% of 100 PRBs is 55, not 54.999...
    const int s1 = static_cast<int>(std::floor(weight_pct / 100.0 * n_prb + 1e-9));
    const int clamped = std::clamp(s1, 0, n_prb);
    return {clamped, n_prb - clamped};
}

std::uint64_t SliceQueue::enqueue(std::uint64_t bytes, std::uint64_t slot, std::uint64_t limit_bytes,
                                  std::uint32_t sdu_bytes) {
    std::uint64_t dropped = 0;
    arrived_ += bytes;
    while (bytes > 0) {
        const auto size = static_cast<std::uint32_t>(std::min<std::uint64_t>(bytes, sdu_bytes));
        bytes -= size;
        if (occupied_ + size > limit_bytes) {
            dropped += size;
            continue;
        }
        fifo_.push_back({size, size, slot});
        occupied_ += size;
    }
    dropped_ += dropped;
    return dropped;
}

SliceQueue::Served SliceQueue::serve(std::uint64_t capacity_bytes, std::uint64_t slot, double slot_ms) {
    Served out;
    while (capacity_bytes > 0 && !fifo_.empty()) {
        auto& head = fifo_.front();
        const auto take = static_cast<std::uint32_t>(std::min<std::uint64_t>(capacity_bytes, head.remaining));
        head.remaining -= take;
        capacity_bytes -= take;
        out.bytes += take;
        if (head.remaining == 0) {
            const double delay = static_cast<double>(slot - head.enqueue_slot + 1) * slot_ms;
            delay_sum_ += delay;
            delay_max_ = std::max(delay_max_, delay);
            delay_min_ = delay_count_ == 0 ? delay : std::min(delay_min_, delay);
            ++delay_count_;
            out.delay_sum_ms += delay;
            out.delay_max_ms = std::max(out.delay_max_ms, delay);
            ++out.sdus;
            fifo_.pop_front();
        }
    }
    occupied_ -= out.bytes;
    served_ += out.bytes;
    return out;
}

void KpmAccumulator::add(const SlotReport& rep) {
    for (std::size_t i = 0; i < 2; ++i) {
        auto& s = sum_[i];
        const auto& r = rep.slices[i];
        s.arrived_bytes += r.arrived_bytes;
        s.dropped_bytes += r.dropped_bytes;
        s.served_bytes += r.served_bytes;
        s.sdus_completed += r.sdus_completed;
        s.delay_sum_ms += r.delay_sum_ms;
        s.delay_max_ms = std::max(s.delay_max_ms, r.delay_max_ms);
    }
}

KpmRecord KpmAccumulator::take(std::uint64_t end_slot, double slot_ms,
                               const std::array<std::uint64_t, 2>& queued_bytes,
                               std::optional<double> active_weight_pct) {
    KpmRecord rec;
    rec.window_start_ms = static_cast<double>(start_slot_) * slot_ms;
    rec.window_len_ms = static_cast<double>(end_slot - start_slot_) * slot_ms;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& s = sum_[i];
        auto& k = rec.slices[i];
        k.arrival_mbps = rec.window_len_ms > 0.0 ? to_mbps(s.arrived_bytes, rec.window_len_ms) : 0.0;
        k.served_mbps = rec.window_len_ms > 0.0 ? to_mbps(s.served_bytes, rec.window_len_ms) : 0.0;
        k.dropped_bytes = s.dropped_bytes;
        k.mean_sdu_delay_ms = s.sdus_completed == 0 ? 0.0 : s.delay_sum_ms / static_cast<double>(s.sdus_completed);
        k.max_sdu_delay_ms = s.delay_max_ms;
        k.arrived_bytes = s.arrived_bytes;
        k.served_bytes = s.served_bytes;
        k.queued_bytes = queued_bytes[i];
        k.sdu_count = s.sdus_completed;
    }
    rec.active_weight_pct = active_weight_pct;
    restart(end_slot);
    return rec;
}

void KpmAccumulator::restart(std::uint64_t start_slot) {
    start_slot_ = start_slot;
    sum_ = {};
}

std::pair<int, int> allocate_pf(const std::array<std::uint64_t, 2>& backlog_bytes,
                                const std::array<double, 2>& avg_bits, const GnbConfig& cfg) {
    const double full = static_cast<double>(slice_capacity_bits(cfg.n_prb, cfg));
    int winner = -1;
    double best = 0.0;
    for (int i = 0; i < 2; ++i) {
        if (backlog_bytes[i] == 0) continue;
        const double achievable = std::min(full, 8.0 * static_cast<double>(backlog_bytes[i]));
        const double metric = achievable / std::max(avg_bits[i], kMinPfAverageBits);
        if (winner < 0 || metric > best) {
            winner = i;
            best = metric;
        }
    }
    if (winner < 0) return {0, 0};
    return winner == 0 ? std::pair{cfg.n_prb, 0} : std::pair{0, cfg.n_prb};
}

std::pair<int, int> allocate_pf(const GnbSim& sim, const GnbConfig& cfg) {
    return allocate_pf({sim.slice(0).occupied_bytes(), sim.slice(1).occupied_bytes()}, sim.pf_avg_bits(), cfg);
}

GnbSim::GnbSim(GnbConfig cfg, SchedulerMode mode, ActionSpace space)
    : cfg_(cfg), mode_(std::move(mode)), space_(std::move(space)) {
    cfg_.validate();
    if (const auto* w = std::get_if<Weighted>(&mode_); w && !space_.contains(w->weight_pct))
        throw ValidationError("initial weight is not in the action space");
    const double half = static_cast<double>(slice_capacity_bits(cfg_.n_prb, cfg_)) / 2.0;
    pf_avg_ = {half, half};
}

std::pair<int, int> GnbSim::next_allocation() const {
    if (const auto* w = std::get_if<Weighted>(&mode_)) return allocate_weighted(w->weight_pct, cfg_.n_prb);
    return allocate_pf(*this, cfg_);
}

SlotReport GnbSim::step_slot(const std::array<std::uint64_t, 2>& arrivals_bytes) {
    SlotReport rep;
    rep.slot_index = slot_;
    for (std::size_t i = 0; i < 2; ++i) {
        rep.slices[i].arrived_bytes = arrivals_bytes[i];
        rep.slices[i].dropped_bytes =
            slices_[i].enqueue(arrivals_bytes[i], slot_, cfg_.buffer_bytes_per_slice, cfg_.sdu_bytes);
    }
    const auto [p1, p2] = next_allocation();
    const std::array<int, 2> prbs{p1, p2};
    for (std::size_t i = 0; i < 2; ++i) {
        const auto cap_bytes = slice_capacity_bits(prbs[i], cfg_) / 8;
        const auto served = slices_[i].serve(cap_bytes, slot_, cfg_.slot_ms());
        rep.slices[i].served_bytes = served.bytes;
        rep.slices[i].sdus_completed = served.sdus;
        rep.slices[i].delay_sum_ms = served.delay_sum_ms;
        rep.slices[i].delay_max_ms = served.delay_max_ms;
        rep.slices[i].prbs = prbs[i];
    }
    if (std::holds_alternative<ProportionalFair>(mode_)) {
        for (std::size_t i = 0; i < 2; ++i) {
            const double bits = 8.0 * static_cast<double>(rep.slices[i].served_bytes);
            pf_avg_[i] = std::max(kMinPfAverageBits, (1.0 - cfg_.pf_alpha) * pf_avg_[i] + cfg_.pf_alpha * bits);
        }
    }
    ++slot_;
    window_.add(rep);
    return rep;
}

void GnbSim::apply_control(double weight_pct) {
    if (!std::holds_alternative<Weighted>(mode_))
        throw ModeError("weight control is only valid under the weighted scheduler");
    if (!space_.contains(weight_pct))
        throw ValidationError("weight " + std::to_string(weight_pct) + "% is not in the action space");
    std::get<Weighted>(mode_).weight_pct = weight_pct;
}

void GnbSim::set_scheduler(SchedulerMode mode) {
    if (const auto* w = std::get_if<Weighted>(&mode); w && !space_.contains(w->weight_pct))
        throw ValidationError("weight is not in the action space");
    mode_ = std::move(mode);
}

std::array<std::uint64_t, 2> GnbSim::queued_bytes() const {
    return {slices_[0].occupied_bytes(), slices_[1].occupied_bytes()};
}

std::optional<double> GnbSim::active_weight() const {
    if (const auto* w = std::get_if<Weighted>(&mode_)) return w->weight_pct;
    return std::nullopt;
}

KpmRecord GnbSim::take_window() { return window_.take(slot_, cfg_.slot_ms(), queued_bytes(), active_weight()); }

std::uint64_t slots_per_window(const GnbConfig& cfg, double kpm_period_ms) {
    const double slots = kpm_period_ms / cfg.slot_ms();
    if (!(slots >= 1.0) || std::abs(slots - std::round(slots)) > 1e-9)
        throw ConfigError("KPM period must be a positive whole number of slots");
    return static_cast<std::uint64_t>(std::llround(slots));
}

std::vector<KpmRecord> run_experiment(const ExperimentSpec& spec, const Scheduling& sched,
                                      const BoundaryObserver& observer) {
    spec.gnb.validate();
    for (const auto& t : spec.traffic) t.validate();
    const auto per_window = slots_per_window(spec.gnb, spec.kpm_period_ms);
    const auto windows = static_cast<std::uint64_t>(std::floor(spec.duration_s * 1000.0 / spec.kpm_period_ms + 1e-9));
    if (windows == 0) throw ConfigError("experiment must last at least one KPM period");

    SchedulerMode mode = ProportionalFair{};
    const WindowController* controller = nullptr;
    if (const auto* w = std::get_if<Weighted>(&sched)) mode = *w;
    else if (const auto* loop = std::get_if<ClosedLoop>(&sched)) {
        mode = Weighted{loop->initial_weight_pct};
        if (loop->controller) controller = &loop->controller;
    }

    GnbSim sim(spec.gnb, mode, spec.space);
    const std::array<std::uint64_t, 2> seeds{derive_seed(spec.seed, 1), derive_seed(spec.seed, 2)};
    const double slot_ms = spec.gnb.slot_ms();

    std::vector<KpmRecord> out;
    out.reserve(windows);
    for (std::uint64_t w = 0; w < windows; ++w) {
        for (std::uint64_t k = 0; k < per_window; ++k) {
            const auto slot = sim.slot_index();
            sim.step_slot({arrivals_for_slot(spec.traffic[0], slot, seeds[0], slot_ms),
                           arrivals_for_slot(spec.traffic[1], slot, seeds[1], slot_ms)});
        }
        out.push_back(sim.take_window());
        if (observer) observer(sim, out.back());
        if (controller) {
            if (auto next = (*controller)(out.back())) sim.apply_control(*next);
        }
    }
    return out;
}

}  // namespace ranslice
