#include "ranslice/xapps.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "ranslice/errors.hpp"
#include "ranslice/numfmt.hpp"

namespace ranslice {

using nlohmann::json;

void to_json(json& j, const RunMeta& m) {
    j = json{{"scenario_id", m.scenario_id},
             {"scheduler", m.scheduler},
             {"seed", m.seed},
             {"slice1_rate_mbps", m.slice1_rate_mbps},
             {"slice2_rate_mbps", m.slice2_rate_mbps}};
    j["weight_pct"] = m.weight_pct ? json(*m.weight_pct) : json(nullptr);
}

void from_json(const json& j, RunMeta& m) {
    j.at("scenario_id").get_to(m.scenario_id);
    j.at("scheduler").get_to(m.scheduler);
    j.at("seed").get_to(m.seed);
    j.at("slice1_rate_mbps").get_to(m.slice1_rate_mbps);
    j.at("slice2_rate_mbps").get_to(m.slice2_rate_mbps);
    auto it = j.find("weight_pct");
    if (it == j.end() || it->is_null()) m.weight_pct.reset();
    else m.weight_pct = it->get<double>();
}

void to_json(json& j, const StoreRow& r) { j = json{{"meta", r.meta}, {"kpm", r.record}}; }

void from_json(const json& j, StoreRow& r) {
    j.at("meta").get_to(r.meta);
    j.at("kpm").get_to(r.record);
}

KpmStore KpmStore::in_memory() { return KpmStore(); }

KpmStore KpmStore::open(const std::filesystem::path& path, bool truncate) {
    KpmStore store;
    store.path_ = path;
    if (!truncate && std::filesystem::exists(path)) {
        std::ifstream in(path);
        if (!in) throw StoreError("cannot read KPM store " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            try {
                store.rows_.push_back(json::parse(line).get<StoreRow>());
            } catch (const std::exception& e) {
                throw StoreError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    store.out_.open(path, truncate ? std::ios::trunc : std::ios::app);
    if (!store.out_) throw StoreError("cannot open KPM store " + path.string() + " for writing");
    return store;
}

KpmStore::KpmStore(KpmStore&&) noexcept = default;
KpmStore& KpmStore::operator=(KpmStore&&) noexcept = default;

KpmStore::~KpmStore() {
    if (out_.is_open()) out_.flush();
}

std::size_t KpmStore::append(StoreRow row) {
    validate(row.record);
    std::unique_lock lk(*mu_);
    if (path_) {
        out_ << json(row).dump() << '\n';
        if (!out_) throw StoreError("write to KPM store " + path_->string() + " failed");
    }
    rows_.push_back(std::move(row));
    return rows_.size() - 1;
}

void KpmStore::write_comment(const json& meta) {
    std::unique_lock lk(*mu_);
    if (!path_) return;
    out_ << "# " << meta.dump() << '\n';
    if (!out_) throw StoreError("write to KPM store " + path_->string() + " failed");
}

void KpmStore::flush() {
    std::unique_lock lk(*mu_);
    if (path_) {
        out_.flush();
        if (!out_) throw StoreError("flush of KPM store " + path_->string() + " failed");
    }
}

std::size_t KpmStore::size() const {
    std::shared_lock lk(*mu_);
    return rows_.size();
}

std::vector<StoreRow> KpmStore::rows() const {
    std::shared_lock lk(*mu_);
    return rows_;
}

std::vector<StoreRow> KpmStore::query(const std::function<bool(const StoreRow&)>& pred) const {
    std::shared_lock lk(*mu_);
    std::vector<StoreRow> out;
    for (const auto& r : rows_)
        if (pred(r)) out.push_back(r);
    return out;
}

namespace {

// Sorting before summing makes the mean independent of row order.
double order_free_mean(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::string meta_line(const json& meta) { return "# " + (meta.is_null() ? json::object() : meta).dump() + "\n"; }

json parse_meta_line(const std::string& line) {
    try {
        return json::parse(line.substr(1));
    } catch (const json::exception&) {
        return json(line.substr(1));
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

DelayTable aggregate_delay_table(const std::vector<StoreRow>& rows, const QuantizerConfig& quant,
                                 const ActionSpace& space) {
    struct Samples {
        std::vector<double> delay, loss, served;
    };
    std::map<std::pair<std::int64_t, std::int64_t>, Samples> cells;
    for (const auto& r : rows) {
        if (!r.meta.weight_pct) continue;
        const double state = quantize_arrival_rate(r.meta.slice1_rate_mbps, quant).quantized_rate_mbps;
        auto& s = cells[{std::llround(state * 1000.0), std::llround(*r.meta.weight_pct * 1000.0)}];
        const auto& k = r.record.slices[0];
        s.delay.push_back(k.mean_sdu_delay_ms);
        s.loss.push_back(k.loss_pct());
        s.served.push_back(k.served_mbps);
    }
    DelayTable table;
    for (double state : quant.grid()) {
        for (double w : space.weights()) {
            auto it = cells.find({std::llround(state * 1000.0), std::llround(w * 1000.0)});
            if (it == cells.end()) throw IncompleteDatasetError(state, w);
            auto& s = it->second;
            table.set(state, w, {order_free_mean(s.delay), order_free_mean(s.loss), order_free_mean(s.served)});
        }
    }
    return table;
}

void write_delay_table_csv(std::ostream& os, const DelayTable& table, const json& meta) {
    os << meta_line(meta);
    os << "state_mbps,weight_pct,mean_delay_ms,mean_loss_pct,mean_served_mbps\n";
    for (const auto& c : table.cells()) {
        os << format_number(c.state_mbps) << ',' << format_number(c.weight_pct) << ','
           << format_number(c.entry.mean_delay_ms) << ',' << format_number(c.entry.mean_loss_pct) << ','
           << format_number(c.entry.mean_served_mbps) << '\n';
    }
}

DelayTable read_delay_table_csv(std::istream& is, json* meta) {
    DelayTable table;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (meta) *meta = parse_meta_line(line);
            continue;
        }
        if (!header) {
            if (line != "state_mbps,weight_pct,mean_delay_ms,mean_loss_pct,mean_served_mbps")
                throw ValidationError("unexpected delay table header: " + line);
            header = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 5) throw ValidationError("malformed delay table row: " + line);
        table.set(parse_number(f[0]), parse_number(f[1]),
                  {parse_number(f[2]), parse_number(f[3]), parse_number(f[4])});
    }
    if (!header) throw ValidationError("delay table has no header");
    return table;
}

void write_policy_csv(std::ostream& os, const TrainedPolicy& policy, const json& meta) {
    os << meta_line(meta);
    os << "state_mbps,weight_pct\n";
    for (const auto& [s, w] : policy.entries()) os << format_number(s) << ',' << format_number(w) << '\n';
}

TrainedPolicy read_policy_csv(std::istream& is, json* meta) {
    TrainedPolicy policy;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (meta) *meta = parse_meta_line(line);
            continue;
        }
        if (!header) {
            if (line != "state_mbps,weight_pct") throw ValidationError("unexpected policy header: " + line);
            header = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 2) throw ValidationError("malformed policy row: " + line);
        policy.set(parse_number(f[0]), parse_number(f[1]));
    }
    if (!header) throw ValidationError("policy file has no header");
    return policy;
}

std::size_t SmXapp::on_indication(const KpmRecord& record) {
    const auto idx = store_.append({meta_, record});
    last_arrival_ = record.slices[0].arrival_mbps;
    ++rows_written_;
    return idx;
}

RcXapp::RcXapp(PolicyHandle policy, QuantizerConfig quant, ActionSpace space, EmitMode mode)
    : policy_(std::move(policy)), quant_(quant), space_(std::move(space)), mode_(mode) {
    quant_.validate();
    if (const auto* fixed = std::get_if<FixedWeight>(&policy_); fixed && !space_.contains(fixed->weight_pct))
        throw PolicyError("fixed weight is not in the action space");
    if (const auto* trained = std::get_if<TrainedPolicy>(&policy_); trained && !trained->covers(quant_, space_))
        throw PolicyError("trained policy does not cover every state with an in-space weight");
}

std::optional<double> RcXapp::decide(double measured_mbps) const {
    if (const auto* fixed = std::get_if<FixedWeight>(&policy_)) return fixed->weight_pct;
    if (const auto* trained = std::get_if<TrainedPolicy>(&policy_)) {
        const auto state = quantize_arrival_rate(std::max(0.0, measured_mbps), quant_);
        auto w = trained->lookup(state.quantized_rate_mbps);
        if (!w) throw PolicyError("policy has no weight for state " + format_number(state.quantized_rate_mbps));
        return w;
    }
    return std::nullopt;
}

std::optional<e2::Control> RcXapp::on_state(double measured_mbps) {
    const auto w = decide(measured_mbps);
    if (!w) return std::nullopt;
    if (mode_ == EmitMode::kChangeOnly && last_sent_ && *last_sent_ == *w) return std::nullopt;
    last_sent_ = *w;
    ++controls_sent_;
    return e2::Control{*w};
}

void RcXapp::on_ack(const e2::ControlAck& ack) {
    if (!ack.applied) {
        ++rejected_;
        // Resend on the next window.
        last_sent_.reset();
    }
}

XappHost::XappHost(std::shared_ptr<e2::Channel> channel, SmXapp& sm, RcXapp* rc)
    : channel_(std::move(channel)), sm_(sm), rc_(rc) {}

void XappHost::subscribe(double report_period_ms) { channel_->send(e2::Subscribe{report_period_ms}); }

void XappHost::handle(const e2::Message& msg) {
    if (const auto* ack = std::get_if<e2::SubscribeAck>(&msg)) {
        if (!subscription_) subscription_ = ack->subscription_id;
        return;
    }
    if (const auto* ind = std::get_if<e2::Indication>(&msg)) {
        if (subscription_ && ind->subscription_id != *subscription_) return;
        sm_.on_indication(ind->record);
        if (rc_ && rc_->enabled()) {
            if (auto ctl = rc_->on_state(ind->record.slices[0].arrival_mbps)) channel_->send(*ctl);
        }
        return;
    }
    if (const auto* ack = std::get_if<e2::ControlAck>(&msg)) {
        if (rc_) rc_->on_ack(*ack);
    }
}

std::size_t XappHost::pump() {
    std::size_t n = 0;
    while (auto msg = channel_->try_recv()) {
        handle(*msg);
        ++n;
    }
    return n;
}

bool XappHost::pump_for(std::chrono::milliseconds timeout) {
    auto msg = channel_->recv_for(timeout);
    if (!msg) return false;
    handle(*msg);
    return true;
}

}  // namespace ranslice
