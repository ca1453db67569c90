#pragma once

// State quantization, the allocation-weight action space, the latency
// feasible set and the distance-to-minimum reward. Everything here is a pure
// function over immutable inputs.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace ranslice {

struct QuantizerConfig {
    double step_mbps = 10.0;
    double min_mbps = 10.0;
    double max_mbps = 140.0;

    // Throws ConfigError unless step > 0, min < max and the range is a whole
    // number of steps.
    void validate() const;

    // Grid points {min, min+step, ..., max}. Only needs step > 0 and
    // min <= max, so a degenerate single-state grid is allowed here.
    std::vector<double> grid() const;
};

struct SliceState {
    double raw_rate_mbps = 0.0;
    double quantized_rate_mbps = 0.0;
};

class ActionSpace {
public:
    // {10, 15, ..., 90}
    ActionSpace();
    explicit ActionSpace(std::vector<double> weights_pct);

    static ActionSpace uniform(double lo_pct, double hi_pct, double step_pct);

    std::size_t size() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    double min_weight() const { return weights_.front(); }
    double max_weight() const { return weights_.back(); }

    bool contains(double weight_pct) const;
    std::optional<std::size_t> index_of(double weight_pct) const;

private:
    std::vector<double> weights_;
};

enum class InfeasibleFallback {
    // Empty feasible set: treat the largest weight as the target.
    kMaxWeight,
    // Empty feasible set: treat the smallest weight as the target.
    kMinWeight,
};

struct RewardSpec {
    double delay_threshold_ms = 10.0;
    InfeasibleFallback infeasible_fallback = InfeasibleFallback::kMaxWeight;

    void validate() const;
};

// Aggregated per-cell measurements for the selected slice.
struct DelayEntry {
    double mean_delay_ms = 0.0;
    double mean_loss_pct = 0.0;
    double mean_served_mbps = 0.0;

    bool operator==(const DelayEntry&) const = default;
};

// (quantized state, weight) -> measured slice-1 statistics. Keys are stored in
// milli-units so that float rates and weights compare exactly.
class DelayTable {
public:
    void set(double state_mbps, double weight_pct, DelayEntry entry);
    const DelayEntry* find(double state_mbps, double weight_pct) const;
    // Throws IncompleteDatasetError when the cell is missing.
    const DelayEntry& at(double state_mbps, double weight_pct) const;

    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }

    // Throws IncompleteDatasetError naming the first uncovered cell.
    void require_complete(const QuantizerConfig& quant, const ActionSpace& space) const;

    struct Cell {
        double state_mbps;
        double weight_pct;
        DelayEntry entry;
    };
    std::vector<Cell> cells() const;

    bool operator==(const DelayTable&) const = default;

private:
    using Key = std::pair<std::int64_t, std::int64_t>;
    static Key key(double state_mbps, double weight_pct);
    std::map<Key, DelayEntry> cells_;
};

// Greedy state -> weight lookup produced by training.
class TrainedPolicy {
public:
    void set(double state_mbps, double weight_pct);
    std::optional<double> lookup(double state_mbps) const;
    std::size_t size() const { return table_.size(); }
    std::vector<std::pair<double, double>> entries() const;

    // Every grid state has an entry whose weight lies in the action space.
    bool covers(const QuantizerConfig& quant, const ActionSpace& space) const;

    bool operator==(const TrainedPolicy&) const = default;

private:
    std::map<std::int64_t, double> table_;
};

// Nearest grid point (round half up), then clipped to [min, max].
SliceState quantize_arrival_rate(double raw_mbps, const QuantizerConfig& cfg);

double weight_of_action(std::size_t index, const ActionSpace& space);

// Weights whose measured delay is strictly under the threshold, ascending.
std::vector<double> feasible_set(const SliceState& state, const DelayTable& table,
                                 const RewardSpec& spec, const ActionSpace& space);

// Negative distance between the action's weight and the smallest feasible one.
double reward(double action_weight_pct, const std::vector<double>& feasible,
              const RewardSpec& spec, const ActionSpace& space);

// The weight reward() is maximised at for a given feasible set.
double target_weight(const std::vector<double>& feasible, const RewardSpec& spec,
                     const ActionSpace& space);

// Single feature (q - min) / (max - min) in [0, 1]; 0 on a single-state grid.
std::vector<double> encode_state(const SliceState& state, const QuantizerConfig& cfg);

}  // namespace ranslice
