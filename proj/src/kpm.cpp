#include "ranslice/kpm.hpp"

#include "ranslice/errors.hpp"

namespace ranslice {

void validate(const KpmRecord& rec) {
    if (!(rec.window_len_ms > 0.0)) throw ValidationError("KPM window length must be positive");
    for (const auto& s : rec.slices) {
        if (s.mean_sdu_delay_ms < 0.0 || s.max_sdu_delay_ms < 0.0)
            throw ValidationError("KPM delays must be non-negative");
        if (s.arrival_mbps < 0.0 || s.served_mbps < 0.0)
            throw ValidationError("KPM rates must be non-negative");
    }
}

void to_json(nlohmann::json& j, const SliceKpm& s) {
    j = nlohmann::json{{"arrival_mbps", s.arrival_mbps},
                       {"served_mbps", s.served_mbps},
                       {"dropped_bytes", s.dropped_bytes},
                       {"mean_sdu_delay_ms", s.mean_sdu_delay_ms},
                       {"max_sdu_delay_ms", s.max_sdu_delay_ms},
                       {"arrived_bytes", s.arrived_bytes},
                       {"served_bytes", s.served_bytes},
                       {"queued_bytes", s.queued_bytes},
                       {"sdu_count", s.sdu_count}};
}

void from_json(const nlohmann::json& j, SliceKpm& s) {
    j.at("arrival_mbps").get_to(s.arrival_mbps);
    j.at("served_mbps").get_to(s.served_mbps);
    j.at("dropped_bytes").get_to(s.dropped_bytes);
    j.at("mean_sdu_delay_ms").get_to(s.mean_sdu_delay_ms);
    j.at("max_sdu_delay_ms").get_to(s.max_sdu_delay_ms);
    // Counters are optional on the wire; producers that only send the
    // headline KPMs still decode.
    s.arrived_bytes = j.value("arrived_bytes", std::uint64_t{0});
    s.served_bytes = j.value("served_bytes", std::uint64_t{0});
    s.queued_bytes = j.value("queued_bytes", std::uint64_t{0});
    s.sdu_count = j.value("sdu_count", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const KpmRecord& r) {
    j = nlohmann::json{{"window_start_ms", r.window_start_ms},
                       {"window_len_ms", r.window_len_ms},
                       {"slices", r.slices}};
    if (r.active_weight_pct) j["active_weight_pct"] = *r.active_weight_pct;
    else j["active_weight_pct"] = nullptr;
}

void from_json(const nlohmann::json& j, KpmRecord& r) {
    j.at("window_start_ms").get_to(r.window_start_ms);
    j.at("window_len_ms").get_to(r.window_len_ms);
    const auto& sl = j.at("slices");
    if (!sl.is_array() || sl.size() != 2) throw ValidationError("KPM record must carry exactly two slices");
    sl.at(0).get_to(r.slices[0]);
    sl.at(1).get_to(r.slices[1]);
    auto it = j.find("active_weight_pct");
    if (it == j.end() || it->is_null()) r.active_weight_pct.reset();
    else r.active_weight_pct = it->get<double>();
}

}  // namespace ranslice
