#include "ranslice/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ranslice/errors.hpp"

namespace ranslice {

using nlohmann::json;

TrafficProfile TrafficConfig::profile(int slice, double rate_mbps) const {
    TrafficProfile p;
    p.mean_rate_mbps = rate_mbps;
    p.packet_bytes = packet_bytes;
    const double jitter = slice == 0 ? slice1_jitter_pct : slice2_jitter_pct;
    if (jitter > 0.0) p.jitter = UniformPctJitter{jitter};
    return p;
}

void RunConfig::validate() const {
    gnb.validate();
    quantizer.validate();
    (void)actions.build();
    reward.validate();
    traffic.profile(0, 1.0).validate();
    traffic.profile(1, 1.0).validate();
    if (!(dataset.window_s > 0.0)) throw ConfigError("dataset.window_s must be positive");
    (void)slots_per_window(gnb, dataset.kpm_period_ms);
    if (!(dataset.slice2_rate_mbps >= 0.0)) throw ConfigError("dataset.slice2_rate_mbps must be non-negative");
    dqn.validate();
    if (!(eval.slice1_step_mbps > 0.0) || eval.slice1_min_mbps > eval.slice1_max_mbps || eval.slice1_min_mbps < 0.0)
        throw ConfigError("eval slice-1 range is invalid");
    if (!(eval.duration_s > 0.0)) throw ConfigError("eval.duration_s must be positive");
    (void)slots_per_window(gnb, eval.kpm_period_ms);
    if (!actions.build().contains(eval.initial_weight_pct))
        throw ConfigError("eval.initial_weight_pct is not in the action space");
    if (serve.scheduler != "drl" && serve.scheduler != "pf" && serve.scheduler != "fixed")
        throw ConfigError("serve.scheduler must be drl, pf or fixed");
    if (serve.scheduler == "fixed" && !actions.build().contains(serve.fixed_weight_pct))
        throw ConfigError("serve.fixed_weight_pct is not in the action space");
    if (serve.duration_s < 0.0 || serve.pace < 0.0) throw ConfigError("serve duration and pace must be non-negative");
    (void)slots_per_window(gnb, serve.kpm_period_ms);
    if (transport.mode != "inproc" && transport.mode != "tcp")
        throw ConfigError("transport.mode must be inproc or tcp");
}

json config_to_json(const RunConfig& c) {
    json j;
    j["gnb"] = {{"n_prb", c.gnb.n_prb},
                {"scs_khz", c.gnb.scs_khz},
                {"spectral_efficiency", c.gnb.spectral_efficiency},
                {"data_re_per_prb_slot", c.gnb.data_re_per_prb_slot},
                {"buffer_bytes_per_slice", c.gnb.buffer_bytes_per_slice},
                {"sdu_bytes", c.gnb.sdu_bytes},
                {"pf_alpha", c.gnb.pf_alpha}};
    j["quantizer"] = {{"step_mbps", c.quantizer.step_mbps},
                      {"min_mbps", c.quantizer.min_mbps},
                      {"max_mbps", c.quantizer.max_mbps}};
    j["actions"] = {{"min_pct", c.actions.min_pct}, {"max_pct", c.actions.max_pct}, {"step_pct", c.actions.step_pct}};
    j["reward"] = {{"delay_threshold_ms", c.reward.delay_threshold_ms},
                   {"infeasible_fallback",
                    c.reward.infeasible_fallback == InfeasibleFallback::kMaxWeight ? "max_weight" : "min_weight"}};
    j["traffic"] = {{"packet_bytes", c.traffic.packet_bytes},
                    {"slice1_jitter_pct", c.traffic.slice1_jitter_pct},
                    {"slice2_jitter_pct", c.traffic.slice2_jitter_pct}};
    j["dataset"] = {{"window_s", c.dataset.window_s},
                    {"kpm_period_ms", c.dataset.kpm_period_ms},
                    {"slice2_rate_mbps", c.dataset.slice2_rate_mbps}};
    const auto& d = c.dqn;
    j["dqn"] = {{"gamma", d.gamma},
                {"lr", d.adam.lr},
                {"beta1", d.adam.beta1},
                {"beta2", d.adam.beta2},
                {"adam_eps", d.adam.eps},
                {"batch", d.batch},
                {"replay_capacity", d.replay_capacity},
                {"episodes", d.episodes},
                {"max_steps", d.max_steps},
                {"eps_start", d.epsilon.start},
                {"eps_end", d.epsilon.end},
                {"eps_anneal_fraction", d.epsilon.anneal_fraction},
                {"target_update_every", d.target_update_every},
                {"hidden_layers", d.hidden_layers},
                {"hidden_width", d.hidden_width},
                {"reward_scale", d.reward_scale},
                {"grad_clip_norm", d.grad_clip_norm},
                {"kernels", d.backend == dqn::Backend::kParallel ? "parallel" : "reference"},
                {"dedupe_states", d.dedupe},
                {"cache_targets", d.cache_targets}};
    j["eval"] = {{"slice1_min_mbps", c.eval.slice1_min_mbps},
                 {"slice1_max_mbps", c.eval.slice1_max_mbps},
                 {"slice1_step_mbps", c.eval.slice1_step_mbps},
                 {"slice2_rate_mbps", c.eval.slice2_rate_mbps},
                 {"duration_s", c.eval.duration_s},
                 {"kpm_period_ms", c.eval.kpm_period_ms},
                 {"initial_weight_pct", c.eval.initial_weight_pct}};
    j["serve"] = {{"scheduler", c.serve.scheduler},
                  {"fixed_weight_pct", c.serve.fixed_weight_pct},
                  {"slice1_rate_mbps", c.serve.slice1_rate_mbps},
                  {"slice2_rate_mbps", c.serve.slice2_rate_mbps},
                  {"kpm_period_ms", c.serve.kpm_period_ms},
                  {"duration_s", c.serve.duration_s},
                  {"pace", c.serve.pace},
                  {"launch_xapps", c.serve.launch_xapps}};
    j["transport"] = {{"mode", c.transport.mode}, {"host", c.transport.host}, {"port", c.transport.port}};
    return j;
}

namespace {

void reject_unknown(const json& base, const json& user, const std::string& path) {
    if (!user.is_object()) throw ConfigError("config" + (path.empty() ? "" : " section '" + path + "'") +
                                             " must be a JSON object");
    for (const auto& [key, value] : user.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        auto it = base.find(key);
        if (it == base.end()) throw ConfigError("unknown config key '" + where + "'");
        if (it->is_object()) reject_unknown(*it, value, where);
    }
}

template <class T>
void read(const json& section, const char* key, T& out, const std::string& where) {
    try {
        section.at(key).get_to(out);
    } catch (const json::exception&) {
        throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig config_from_json(const json& user) {
    RunConfig c;
    json j = config_to_json(c);
    reject_unknown(j, user, "");
    j.merge_patch(user);

    const auto& g = j["gnb"];
    read(g, "n_prb", c.gnb.n_prb, "gnb");
    read(g, "scs_khz", c.gnb.scs_khz, "gnb");
    read(g, "spectral_efficiency", c.gnb.spectral_efficiency, "gnb");
    read(g, "data_re_per_prb_slot", c.gnb.data_re_per_prb_slot, "gnb");
    read(g, "buffer_bytes_per_slice", c.gnb.buffer_bytes_per_slice, "gnb");
    read(g, "sdu_bytes", c.gnb.sdu_bytes, "gnb");
    read(g, "pf_alpha", c.gnb.pf_alpha, "gnb");

    const auto& q = j["quantizer"];
    read(q, "step_mbps", c.quantizer.step_mbps, "quantizer");
    read(q, "min_mbps", c.quantizer.min_mbps, "quantizer");
    read(q, "max_mbps", c.quantizer.max_mbps, "quantizer");

    const auto& a = j["actions"];
    read(a, "min_pct", c.actions.min_pct, "actions");
    read(a, "max_pct", c.actions.max_pct, "actions");
    read(a, "step_pct", c.actions.step_pct, "actions");

    const auto& r = j["reward"];
    read(r, "delay_threshold_ms", c.reward.delay_threshold_ms, "reward");
    std::string fallback;
    read(r, "infeasible_fallback", fallback, "reward");
    if (fallback == "max_weight") c.reward.infeasible_fallback = InfeasibleFallback::kMaxWeight;
    else if (fallback == "min_weight") c.reward.infeasible_fallback = InfeasibleFallback::kMinWeight;
    else throw ConfigError("reward.infeasible_fallback must be max_weight or min_weight");

    const auto& t = j["traffic"];
    read(t, "packet_bytes", c.traffic.packet_bytes, "traffic");
    read(t, "slice1_jitter_pct", c.traffic.slice1_jitter_pct, "traffic");
    read(t, "slice2_jitter_pct", c.traffic.slice2_jitter_pct, "traffic");

    const auto& ds = j["dataset"];
    read(ds, "window_s", c.dataset.window_s, "dataset");
    read(ds, "kpm_period_ms", c.dataset.kpm_period_ms, "dataset");
    read(ds, "slice2_rate_mbps", c.dataset.slice2_rate_mbps, "dataset");

    const auto& d = j["dqn"];
    auto& dq = c.dqn;
    read(d, "gamma", dq.gamma, "dqn");
    read(d, "lr", dq.adam.lr, "dqn");
    read(d, "beta1", dq.adam.beta1, "dqn");
    read(d, "beta2", dq.adam.beta2, "dqn");
    read(d, "adam_eps", dq.adam.eps, "dqn");
    read(d, "batch", dq.batch, "dqn");
    read(d, "replay_capacity", dq.replay_capacity, "dqn");
    read(d, "episodes", dq.episodes, "dqn");
    read(d, "max_steps", dq.max_steps, "dqn");
    read(d, "eps_start", dq.epsilon.start, "dqn");
    read(d, "eps_end", dq.epsilon.end, "dqn");
    read(d, "eps_anneal_fraction", dq.epsilon.anneal_fraction, "dqn");
    read(d, "target_update_every", dq.target_update_every, "dqn");
    read(d, "hidden_layers", dq.hidden_layers, "dqn");
    read(d, "hidden_width", dq.hidden_width, "dqn");
    read(d, "reward_scale", dq.reward_scale, "dqn");
    read(d, "grad_clip_norm", dq.grad_clip_norm, "dqn");
    std::string kernels;
    read(d, "kernels", kernels, "dqn");
    if (kernels == "parallel") dq.backend = dqn::Backend::kParallel;
    else if (kernels == "reference") dq.backend = dqn::Backend::kReference;
    else throw ConfigError("dqn.kernels must be parallel or reference");
    read(d, "dedupe_states", dq.dedupe, "dqn");
    read(d, "cache_targets", dq.cache_targets, "dqn");

    const auto& e = j["eval"];
    read(e, "slice1_min_mbps", c.eval.slice1_min_mbps, "eval");
    read(e, "slice1_max_mbps", c.eval.slice1_max_mbps, "eval");
    read(e, "slice1_step_mbps", c.eval.slice1_step_mbps, "eval");
    read(e, "slice2_rate_mbps", c.eval.slice2_rate_mbps, "eval");
    read(e, "duration_s", c.eval.duration_s, "eval");
    read(e, "kpm_period_ms", c.eval.kpm_period_ms, "eval");
    read(e, "initial_weight_pct", c.eval.initial_weight_pct, "eval");

    const auto& s = j["serve"];
    read(s, "scheduler", c.serve.scheduler, "serve");
    read(s, "fixed_weight_pct", c.serve.fixed_weight_pct, "serve");
    read(s, "slice1_rate_mbps", c.serve.slice1_rate_mbps, "serve");
    read(s, "slice2_rate_mbps", c.serve.slice2_rate_mbps, "serve");
    read(s, "kpm_period_ms", c.serve.kpm_period_ms, "serve");
    read(s, "duration_s", c.serve.duration_s, "serve");
    read(s, "pace", c.serve.pace, "serve");
    read(s, "launch_xapps", c.serve.launch_xapps, "serve");

    const auto& tr = j["transport"];
    read(tr, "mode", c.transport.mode, "transport");
    read(tr, "host", c.transport.host, "transport");
    read(tr, "port", c.transport.port, "transport");

    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_to_json(cfg).dump())));
    return buf;
}

json output_meta(const RunConfig& cfg, std::uint64_t seed, const std::string& artifact) {
    return {{"artifact", artifact}, {"config_hash", config_hash(cfg)}, {"seed", seed}};
}

}  // namespace ranslice
