#pragma once

// Run configuration shared by every slicectl subcommand. Loaded from JSON
// as a partial overlay on the defaults; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ranslice/core.hpp"
#include "ranslice/dqn/train.hpp"
#include "ranslice/ransim.hpp"

namespace ranslice {

struct ActionSpaceConfig {
    double min_pct = 10.0;
    double max_pct = 90.0;
    double step_pct = 5.0;

    ActionSpace build() const { return ActionSpace::uniform(min_pct, max_pct, step_pct); }
};

struct TrafficConfig {
    std::uint32_t packet_bytes = 1500;
    double slice1_jitter_pct = 0.0;  // 0 means constant bit rate
    double slice2_jitter_pct = 0.0;

    TrafficProfile profile(int slice, double rate_mbps) const;
};

struct DatasetConfig {
    double window_s = 30.0;
    double kpm_period_ms = 100.0;
    double slice2_rate_mbps = 117.0;
};

struct EvalConfig {
    double slice1_min_mbps = 20.0;
    double slice1_max_mbps = 140.0;
    double slice1_step_mbps = 10.0;
    double slice2_rate_mbps = 117.0;
    double duration_s = 300.0;
    double kpm_period_ms = 100.0;
    double initial_weight_pct = 50.0;
};

struct ServeConfig {
    std::string scheduler = "drl";  // "drl", "pf" or "fixed"
    double fixed_weight_pct = 50.0;
    double slice1_rate_mbps = 60.0;
    double slice2_rate_mbps = 117.0;
    double kpm_period_ms = 100.0;
    double duration_s = 0.0;  // simulated seconds; 0 runs until interrupted
    double pace = 0.0;        // simulated seconds per wall second; 0 runs unpaced
    bool launch_xapps = true;
};

struct TransportConfig {
    std::string mode = "inproc";  // "inproc" or "tcp"
    std::string host = "127.0.0.1";
    std::uint16_t port = 36421;
};

struct RunConfig {
    GnbConfig gnb;
    QuantizerConfig quantizer;
    ActionSpaceConfig actions;
    RewardSpec reward;
    TrafficConfig traffic;
    DatasetConfig dataset;
    dqn::DqnConfig dqn;
    EvalConfig eval;
    ServeConfig serve;
    TransportConfig transport;

    // Throws ConfigError.
    void validate() const;
};

nlohmann::json config_to_json(const RunConfig& cfg);
// Missing keys keep their defaults. Throws ConfigError on unknown keys or
// wrongly typed values.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// FNV-1a 64 over the canonical JSON, as 16 hex digits. The seed is not part
// of the configuration and does not affect the hash.
std::string config_hash(const RunConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes);

// Metadata line embedded in every output file.
nlohmann::json output_meta(const RunConfig& cfg, std::uint64_t seed, const std::string& artifact);

}  // namespace ranslice
