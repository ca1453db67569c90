#pragma once

// gNB side of the E2 bus: answers subscriptions with periodic indications
// clocked by simulator slots, and applies weight controls.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ranslice/e2bus.hpp"
#include "ranslice/ransim.hpp"

namespace ranslice {

class GnbEndpoint {
public:
    using Logger = std::function<void(const std::string&)>;

    GnbEndpoint(GnbSim& sim, std::array<TrafficProfile, 2> traffic, std::uint64_t seed);

    // Safe to call from any thread (e.g. a TCP accept loop).
    void attach(std::shared_ptr<e2::Channel> channel);
    // Creates an in-process pair, attaches one end and returns the other.
    std::shared_ptr<e2::Channel> connect_inproc();

    // Handles every message already queued on attached channels.
    void poll();
    // poll(), one slot, then indications that fall due at the new boundary.
    SlotReport step();
    void run_slots(std::uint64_t n);

    std::uint64_t slot_index() const { return sim_.slot_index(); }
    std::size_t subscription_count() const;
    std::size_t connection_count() const;
    std::uint64_t indications_sent() const { return indications_sent_; }

    void set_logger(Logger log) { log_ = std::move(log); }

private:
    struct Subscription {
        std::uint32_t id;
        std::uint64_t period_slots;
        std::uint64_t next_due_slot;
        KpmAccumulator window;
    };
    struct Connection {
        std::shared_ptr<e2::Channel> channel;
        std::vector<Subscription> subscriptions;
        bool dead = false;
    };

    void handle(Connection& conn, const e2::Message& msg);
    void send(Connection& conn, const e2::Message& msg);
    void log(const std::string& line) const;

    GnbSim& sim_;
    std::array<TrafficProfile, 2> traffic_;
    std::array<std::uint64_t, 2> seeds_;

    mutable std::mutex attach_mu_;
    std::vector<std::shared_ptr<e2::Channel>> pending_;
    std::vector<Connection> connections_;

    std::uint32_t next_subscription_id_ = 1;
    std::uint64_t indications_sent_ = 0;
    Logger log_;
};

}  // namespace ranslice
