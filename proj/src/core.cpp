#include "ranslice/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ranslice/errors.hpp"

namespace ranslice {

namespace {

constexpr double kGridTolerance = 1e-9;

std::int64_t milli(double v) { return std::llround(v * 1000.0); }

}  // namespace

IncompleteDatasetError::IncompleteDatasetError(double state_mbps, double weight_pct)
    : Error([&] {
          std::ostringstream os;
          os << "incomplete dataset: no delay measurement for state " << state_mbps
             << " Mbps, weight " << weight_pct << "%";
          return os.str();
      }()),
      state_mbps_(state_mbps),
      weight_pct_(weight_pct) {}

void QuantizerConfig::validate() const {
    if (!(step_mbps > 0.0)) throw ConfigError("quantizer step must be positive");
    if (!(min_mbps < max_mbps)) throw ConfigError("quantizer requires min < max");
    const double steps = (max_mbps - min_mbps) / step_mbps;
    if (std::abs(steps - std::round(steps)) > 1e-6)
        throw ConfigError("quantizer range must be a whole number of steps");
}

std::vector<double> QuantizerConfig::grid() const {
    if (!(step_mbps > 0.0) || min_mbps > max_mbps)
        throw ConfigError("quantizer grid requires step > 0 and min <= max");
    const auto n = static_cast<std::size_t>(std::llround((max_mbps - min_mbps) / step_mbps));
    std::vector<double> out;
    out.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) out.push_back(min_mbps + static_cast<double>(k) * step_mbps);
    return out;
}

ActionSpace::ActionSpace() : ActionSpace(uniform(10.0, 90.0, 5.0)) {}

ActionSpace::ActionSpace(std::vector<double> weights_pct) : weights_(std::move(weights_pct)) {
    if (weights_.empty()) throw ConfigError("action space is empty");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (!(weights_[i] > 0.0 && weights_[i] < 100.0))
            throw ConfigError("action weights must lie strictly between 0 and 100");
        if (i > 0 && !(weights_[i] > weights_[i - 1]))
            throw ConfigError("action weights must be strictly increasing");
    }
}

ActionSpace ActionSpace::uniform(double lo_pct, double hi_pct, double step_pct) {
    if (!(step_pct > 0.0) || hi_pct < lo_pct) throw ConfigError("invalid action range");
    const auto n = std::llround((hi_pct - lo_pct) / step_pct);
    std::vector<double> w;
    for (long long k = 0; k <= n; ++k) w.push_back(lo_pct + static_cast<double>(k) * step_pct);
    return ActionSpace(std::move(w));
}

bool ActionSpace::contains(double weight_pct) const { return index_of(weight_pct).has_value(); }

std::optional<std::size_t> ActionSpace::index_of(double weight_pct) const {
    if (!std::isfinite(weight_pct)) return std::nullopt;
    const auto m = milli(weight_pct);
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if (milli(weights_[i]) == m) return i;
    return std::nullopt;
}

void RewardSpec::validate() const {
    if (!(delay_threshold_ms > 0.0)) throw ConfigError("delay threshold must be positive");
}

DelayTable::Key DelayTable::key(double state_mbps, double weight_pct) {
    return {milli(state_mbps), milli(weight_pct)};
}

void DelayTable::set(double state_mbps, double weight_pct, DelayEntry entry) {
    cells_[key(state_mbps, weight_pct)] = entry;
}

const DelayEntry* DelayTable::find(double state_mbps, double weight_pct) const {
    auto it = cells_.find(key(state_mbps, weight_pct));
    return it == cells_.end() ? nullptr : &it->second;
}

const DelayEntry& DelayTable::at(double state_mbps, double weight_pct) const {
    if (const auto* e = find(state_mbps, weight_pct)) return *e;
    throw IncompleteDatasetError(state_mbps, weight_pct);
}

void DelayTable::require_complete(const QuantizerConfig& quant, const ActionSpace& space) const {
    for (double s : quant.grid())
        for (double w : space.weights()) (void)at(s, w);
}

std::vector<DelayTable::Cell> DelayTable::cells() const {
    std::vector<Cell> out;
    out.reserve(cells_.size());
    for (const auto& [k, e] : cells_)
        out.push_back({static_cast<double>(k.first) / 1000.0, static_cast<double>(k.second) / 1000.0, e});
    return out;
}

void TrainedPolicy::set(double state_mbps, double weight_pct) { table_[milli(state_mbps)] = weight_pct; }

std::optional<double> TrainedPolicy::lookup(double state_mbps) const {
    auto it = table_.find(milli(state_mbps));
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<double, double>> TrainedPolicy::entries() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& [k, w] : table_) out.emplace_back(static_cast<double>(k) / 1000.0, w);
    return out;
}

bool TrainedPolicy::covers(const QuantizerConfig& quant, const ActionSpace& space) const {
    for (double s : quant.grid()) {
        auto w = lookup(s);
        if (!w || !space.contains(*w)) return false;
    }
    return true;
}

SliceState quantize_arrival_rate(double raw_mbps, const QuantizerConfig& cfg) {
    cfg.validate();
    if (!(raw_mbps >= 0.0) || !std::isfinite(raw_mbps))
        throw ValidationError("arrival rate must be a finite non-negative value");
    const double scaled = (raw_mbps - cfg.min_mbps) / cfg.step_mbps;
    // Half-up; the tolerance keeps k * 0.1 style inputs from flipping on a tie.
    double q = std::floor(scaled + 0.5 + kGridTolerance) * cfg.step_mbps + cfg.min_mbps;
    if (q >= cfg.max_mbps) q = cfg.max_mbps;
    else if (q <= cfg.min_mbps) q = cfg.min_mbps;
    return {raw_mbps, q};
}

double weight_of_action(std::size_t index, const ActionSpace& space) {
    if (index >= space.size())
        throw IndexError("action index " + std::to_string(index) + " outside action space of size " +
                         std::to_string(space.size()));
    return space.weights()[index];
}

std::vector<double> feasible_set(const SliceState& state, const DelayTable& table,
                                 const RewardSpec& spec, const ActionSpace& space) {
    std::vector<double> out;
    for (double w : space.weights())
        if (table.at(state.quantized_rate_mbps, w).mean_delay_ms < spec.delay_threshold_ms) out.push_back(w);
    return out;
}

double target_weight(const std::vector<double>& feasible, const RewardSpec& spec,
                     const ActionSpace& space) {
    if (!feasible.empty()) return *std::min_element(feasible.begin(), feasible.end());
    switch (spec.infeasible_fallback) {
        case InfeasibleFallback::kMinWeight:
            return space.min_weight();
        case InfeasibleFallback::kMaxWeight:
            break;
    }
    return space.max_weight();
}

double reward(double action_weight_pct, const std::vector<double>& feasible, const RewardSpec& spec,
              const ActionSpace& space) {
    return -std::abs(action_weight_pct - target_weight(feasible, spec, space));
}

std::vector<double> encode_state(const SliceState& state, const QuantizerConfig& cfg) {
    const double span = cfg.max_mbps - cfg.min_mbps;
    if (span <= 0.0) return {0.0};  // single-state grid
    return {(state.quantized_rate_mbps - cfg.min_mbps) / span};
}

}  // namespace ranslice
