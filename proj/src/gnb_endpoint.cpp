#include "ranslice/gnb_endpoint.hpp"

#include <algorithm>
#include <cmath>

#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice {

GnbEndpoint::GnbEndpoint(GnbSim& sim, std::array<TrafficProfile, 2> traffic, std::uint64_t seed)
    : sim_(sim), traffic_(std::move(traffic)), seeds_{derive_seed(seed, 1), derive_seed(seed, 2)} {
    for (const auto& t : traffic_) t.validate();
}

void GnbEndpoint::attach(std::shared_ptr<e2::Channel> channel) {
    std::lock_guard lk(attach_mu_);
    pending_.push_back(std::move(channel));
}

std::shared_ptr<e2::Channel> GnbEndpoint::connect_inproc() {
    auto [gnb_side, xapp_side] = e2::make_inproc_pair();
    attach(std::move(gnb_side));
    return xapp_side;
}

std::size_t GnbEndpoint::subscription_count() const {
    std::size_t n = 0;
    for (const auto& c : connections_) n += c.subscriptions.size();
    return n;
}

std::size_t GnbEndpoint::connection_count() const {
    std::lock_guard lk(attach_mu_);
    return connections_.size() + pending_.size();
}

void GnbEndpoint::log(const std::string& line) const {
    if (log_) log_(line);
}

void GnbEndpoint::send(Connection& conn, const e2::Message& msg) {
    if (conn.dead) return;
    try {
        conn.channel->send(msg);
    } catch (const TransportError& e) {
        log(std::string("xApp connection lost: ") + e.what());
        conn.dead = true;
    }
}

void GnbEndpoint::handle(Connection& conn, const e2::Message& msg) {
    if (const auto* sub = std::get_if<e2::Subscribe>(&msg)) {
        const auto period =
            std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(sub->report_period_ms / sim_.config().slot_ms())));
        Subscription s{next_subscription_id_++, period, sim_.slot_index() + period, {}};
        s.window.restart(sim_.slot_index());
        conn.subscriptions.push_back(s);
        send(conn, e2::SubscribeAck{s.id});
        return;
    }
    if (const auto* ctl = std::get_if<e2::Control>(&msg)) {
        bool applied = true;
        try {
            sim_.apply_control(ctl->weight_pct);
        } catch (const Error& e) {
            log(std::string("control rejected: ") + e.what());
            applied = false;
        }
        send(conn, e2::ControlAck{applied, sim_.slot_index()});
        return;
    }
    log(std::string("ignoring unexpected ") + e2::type_name(msg) + " from xApp");
}

void GnbEndpoint::poll() {
    {
        std::lock_guard lk(attach_mu_);
        for (auto& ch : pending_) connections_.push_back({std::move(ch), {}, false});
        pending_.clear();
    }
    for (auto& conn : connections_) {
        while (!conn.dead) {
            std::optional<e2::Message> msg;
            try {
                msg = conn.channel->try_recv();
            } catch (const ValidationError& e) {
                // A control carrying a weight off the grid: refuse it.
                log(std::string("invalid message: ") + e.what());
                send(conn, e2::ControlAck{false, sim_.slot_index()});
                continue;
            } catch (const ProtocolError& e) {
                log(std::string("protocol error: ") + e.what());
                continue;
            }
            if (!msg) break;
            handle(conn, *msg);
        }
        if (!conn.channel->is_open()) conn.dead = true;
    }
    const auto before = connections_.size();
    std::erase_if(connections_, [](const Connection& c) { return c.dead; });
    if (connections_.size() != before) log("subscription torn down; holding the last applied weight");
}

SlotReport GnbEndpoint::step() {
    poll();
    const auto slot = sim_.slot_index();
    const double slot_ms = sim_.config().slot_ms();
    const auto rep = sim_.step_slot({arrivals_for_slot(traffic_[0], slot, seeds_[0], slot_ms),
                                     arrivals_for_slot(traffic_[1], slot, seeds_[1], slot_ms)});
    const auto now = sim_.slot_index();
    for (auto& conn : connections_) {
        for (auto& sub : conn.subscriptions) {
            sub.window.add(rep);
            if (now < sub.next_due_slot) continue;
            auto rec = sub.window.take(now, slot_ms, sim_.queued_bytes(), sim_.active_weight());
            sub.next_due_slot += sub.period_slots;
            send(conn, e2::Indication{sub.id, std::move(rec)});
            ++indications_sent_;
        }
    }
    return rep;
}

void GnbEndpoint::run_slots(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) step();
}

}  // namespace ranslice
