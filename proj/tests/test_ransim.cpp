#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/ransim.hpp"

using namespace ranslice;

static const ActionSpace kSpace;

namespace {

void check_conserved(const GnbSim& sim) {
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& q = sim.slice(i);
        REQUIRE(q.arrived_bytes() == q.served_bytes() + q.dropped_bytes() + q.occupied_bytes());
    }
}

ExperimentSpec spec_for(double s1, double s2, double duration_s) {
    ExperimentSpec spec;
    spec.traffic = {TrafficProfile{s1, 1500, NoJitter{}}, TrafficProfile{s2, 1500, NoJitter{}}};
    spec.duration_s = duration_s;
    return spec;
}

}  // namespace

TEST_CASE("capacity model") {
    const GnbConfig cfg;
    CHECK(cfg.slot_ms() == 0.5);
    CHECK(slice_capacity_bits(0, cfg) == 0);
    CHECK(slice_capacity_bits(106, cfg) == 122'366);
    const double mbps = static_cast<double>(slice_capacity_bits(106, cfg)) * cfg.slots_per_second() / 1e6;
    CHECK(mbps == doctest::Approx(oracle::cell_capacity_mbps(106, 156, 7.4, 2000)));
    CHECK(mbps > 227.0);
    CHECK(mbps < 257.0);
    const auto half = static_cast<double>(slice_capacity_bits(53, cfg));
    CHECK(std::fabs(half - 122'366 / 2.0) <= 1.0);
}

TEST_CASE("gnb config validation") {
    GnbConfig cfg;
    cfg.n_prb = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = GnbConfig{};
    cfg.scs_khz = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("weighted allocation") {
    CHECK(allocate_weighted(50, 106) == std::pair{53, 53});
    CHECK(allocate_weighted(10, 106) == std::pair{10, 96});
    CHECK(allocate_weighted(90, 106) == std::pair{95, 11});
    for (double w : kSpace.weights()) {
        const auto [a, b] = allocate_weighted(w, 106);
        CHECK(a + b == 106);
    }
}

TEST_CASE("pf allocation") {
    const GnbConfig cfg;
    const std::array<double, 2> avg{1e4, 1e4};
    CHECK(allocate_pf({0, 5000}, avg, cfg) == std::pair{0, 106});
    CHECK(allocate_pf({5000, 0}, avg, cfg) == std::pair{106, 0});
    CHECK(allocate_pf({0, 0}, avg, cfg) == std::pair{0, 0});
    CHECK(allocate_pf({1'000'000, 1'000'000}, {1e4, 2e4}, cfg) == std::pair{106, 0});
    CHECK(allocate_pf({1'000'000, 1'000'000}, {2e4, 1e4}, cfg) == std::pair{0, 106});
}

TEST_CASE("pf shares a saturated cell equally") {
    const GnbConfig cfg;
    GnbSim sim(cfg, ProportionalFair{});
    const auto per_slot = slice_capacity_bits(106, cfg) / 8;
    std::array<std::uint64_t, 2> prbs{0, 0};
    for (int s = 0; s < 10'000; ++s) {
        const auto rep = sim.step_slot({2 * per_slot, 2 * per_slot});
        prbs[0] += static_cast<std::uint64_t>(rep.slices[0].prbs);
        prbs[1] += static_cast<std::uint64_t>(rep.slices[1].prbs);
        REQUIRE(rep.slices[0].prbs + rep.slices[1].prbs == 106);
    }
    const double share = static_cast<double>(prbs[0]) / static_cast<double>(prbs[0] + prbs[1]);
    CHECK(share == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::fabs(share - 0.5) <= 0.01);
    check_conserved(sim);
}

TEST_CASE("step_slot: idle cell reports zeros") {
    GnbSim sim(GnbConfig{});
    const auto rep = sim.step_slot({0, 0});
    CHECK(rep.slices[0] == SliceSlotReport{0, 0, 0, 0, 0.0, 0.0, 53});
    CHECK(rep.slices[1] == SliceSlotReport{0, 0, 0, 0, 0.0, 0.0, 53});
    CHECK(sim.slot_index() == 1);
}

TEST_CASE("step_slot: one SDU is served in its arrival slot") {
    GnbConfig cfg;
    GnbSim sim(cfg, Weighted{90});
    const auto rep = sim.step_slot({1500, 0});
    CHECK(rep.slices[0].served_bytes == 1500);
    CHECK(rep.slices[0].sdus_completed == 1);
    CHECK(rep.slices[0].delay_max_ms == 0.5);
    CHECK(rep.slices[0].delay_sum_ms == 0.5);
}

TEST_CASE("step_slot: SDUs spanning slots take the delay of their last byte") {
    GnbSim sim(GnbConfig{}, Weighted{10});  // 10 PRBs: 11,544 bits = 1443 bytes per slot
    auto rep = sim.step_slot({1500, 0});
    CHECK(rep.slices[0].served_bytes == 1443);
    CHECK(rep.slices[0].sdus_completed == 0);
    rep = sim.step_slot({0, 0});
    CHECK(rep.slices[0].served_bytes == 57);
    CHECK(rep.slices[0].sdus_completed == 1);
    CHECK(rep.slices[0].delay_max_ms == 1.0);
}

TEST_CASE("step_slot: overload drops and conserves bytes") {
    GnbConfig cfg;
    cfg.buffer_bytes_per_slice = 30'000;
    GnbSim sim(cfg, Weighted{50});
    const auto per_slot = slice_capacity_bits(106, cfg) / 8;
    std::uint64_t dropped = 0;
    for (int s = 0; s < 1000; ++s) {
        const auto rep = sim.step_slot({2 * per_slot, 2 * per_slot});
        dropped += rep.slices[0].dropped_bytes;
        check_conserved(sim);
        REQUIRE(sim.slice(0).occupied_bytes() <= cfg.buffer_bytes_per_slice);
        REQUIRE(sim.slice(1).occupied_bytes() <= cfg.buffer_bytes_per_slice);
    }
    CHECK(dropped > 0);
}

TEST_CASE("apply_control") {
    GnbSim sim(GnbConfig{});
    sim.apply_control(50);
    CHECK(sim.next_allocation() == std::pair{53, 53});
    sim.apply_control(90);
    CHECK(sim.next_allocation() == std::pair{95, 11});
    CHECK_THROWS_AS(sim.apply_control(37), ValidationError);
    CHECK(sim.active_weight() == std::optional<double>(90));

    GnbSim pf(GnbConfig{}, ProportionalFair{});
    CHECK_THROWS_AS(pf.apply_control(50), ModeError);
    CHECK_FALSE(pf.active_weight().has_value());
    CHECK_THROWS_AS(GnbSim(GnbConfig{}, Weighted{37}), ValidationError);
}

TEST_CASE("apply_control takes effect at the next slot") {
    GnbSim sim(GnbConfig{}, Weighted{10});
    CHECK(sim.step_slot({0, 0}).slices[0].prbs == 10);
    sim.apply_control(90);
    CHECK(sim.step_slot({0, 0}).slices[0].prbs == 95);
}

TEST_CASE("run_experiment: one record per KPM period") {
    auto spec = spec_for(60, 117, 120);
    const auto recs = run_experiment(spec, Weighted{50});
    REQUIRE(recs.size() == 1200);
    CHECK(recs.front().window_start_ms == 0.0);
    CHECK(recs.back().window_start_ms == doctest::Approx(119'900.0));
    for (const auto& r : recs) {
        CHECK(r.window_len_ms == 100.0);
        CHECK(r.active_weight_pct == std::optional<double>(50));
    }
    CHECK(slots_per_window(GnbConfig{}, 100) == 200);
    CHECK_THROWS_AS(slots_per_window(GnbConfig{}, 0.3), ConfigError);
}

TEST_CASE("run_experiment: zero traffic gives zero KPMs") {
    const auto recs = run_experiment(spec_for(0, 0, 1), Weighted{50});
    REQUIRE(recs.size() == 10);
    for (const auto& r : recs) {
        for (const auto& s : r.slices) CHECK(s == SliceKpm{});
    }
}

TEST_CASE("run_experiment: deterministic given the seed") {
    auto spec = spec_for(90, 117, 5);
    spec.traffic[1].jitter = UniformPctJitter{2.0};
    CHECK(run_experiment(spec, ProportionalFair{}) == run_experiment(spec, ProportionalFair{}));
}

TEST_CASE("run_experiment: conservation at every boundary") {
    auto spec = spec_for(140, 117, 20);
    spec.gnb.buffer_bytes_per_slice = 200'000;
    std::size_t boundaries = 0;
    const auto observer = [&](const GnbSim& sim, const KpmRecord&) {
        check_conserved(sim);
        ++boundaries;
    };
    run_experiment(spec, Weighted{50}, observer);
    run_experiment(spec, ProportionalFair{}, observer);
    CHECK(boundaries == 400);
}

TEST_CASE("run_experiment: closed loop applies the controller after each window") {
    auto spec = spec_for(60, 117, 2);
    std::vector<double> seen;
    ClosedLoop loop{[&](const KpmRecord& r) -> std::optional<double> {
                        seen.push_back(*r.active_weight_pct);
                        return seen.size() % 2 ? 70.0 : 30.0;
                    },
                    50.0};
    const auto recs = run_experiment(spec, loop);
    REQUIRE(recs.size() == 20);
    CHECK(recs[0].active_weight_pct == std::optional<double>(50));
    CHECK(recs[1].active_weight_pct == std::optional<double>(70));
    CHECK(recs[2].active_weight_pct == std::optional<double>(30));
}

TEST_CASE("slice-1 delay never increases with its weight") {
    for (double rate : {40.0, 100.0, 130.0}) {
        double prev = 1e300;
        for (double w : kSpace.weights()) {
            const auto recs = run_experiment(spec_for(rate, 117, 2), Weighted{w});
            double sum = 0;
            std::uint64_t n = 0;
            for (const auto& r : recs) {
                sum += r.slices[0].mean_sdu_delay_ms * static_cast<double>(r.slices[0].sdu_count);
                n += r.slices[0].sdu_count;
            }
            const double mean = n ? sum / static_cast<double>(n) : 0.0;
            CHECK(mean <= prev + 1e-9);
            prev = mean;
        }
    }
}

TEST_CASE("every served SDU waits at least one slot") {
    auto spec = spec_for(100, 117, 2);
    for (const auto& r : run_experiment(spec, Weighted{40})) {
        for (const auto& s : r.slices) {
            if (s.sdu_count) CHECK(s.mean_sdu_delay_ms >= 0.5);
            CHECK(s.max_sdu_delay_ms >= 0.0);
        }
    }
}
