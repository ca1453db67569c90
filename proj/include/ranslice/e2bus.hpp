#pragma once

// Toy E2-style control/telemetry bus. Frames are a 4-byte big-endian length
// followed by a UTF-8 JSON body carrying a "type" discriminator.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ranslice/core.hpp"
#include "ranslice/kpm.hpp"

namespace ranslice::e2 {

constexpr std::uint16_t kDefaultPort = 36421;
constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

struct Subscribe {
    double report_period_ms = 100.0;
    bool operator==(const Subscribe&) const = default;
};
struct SubscribeAck {
    std::uint32_t subscription_id = 0;
    bool operator==(const SubscribeAck&) const = default;
};
struct Indication {
    std::uint32_t subscription_id = 0;
    KpmRecord record;
    bool operator==(const Indication&) const = default;
};
struct Control {
    double weight_pct = 50.0;
    bool operator==(const Control&) const = default;
};
struct ControlAck {
    bool applied = false;
    std::uint64_t slot_index = 0;
    bool operator==(const ControlAck&) const = default;
};

using Message = std::variant<Subscribe, SubscribeAck, Indication, Control, ControlAck>;

const char* type_name(const Message& msg);

using Bytes = std::vector<std::uint8_t>;

Bytes encode_message(const Message& msg);

struct Decoded {
    // Empty when the input does not yet hold a complete frame.
    std::optional<Message> message;
    std::size_t consumed = 0;
};

// Decodes the first frame in `bytes`. Throws ProtocolError for oversized
// frames, malformed JSON or unknown types, and ValidationError for control
// weights outside `space`. A frame that fails to decode still counts as
// consumed when it was complete.
Decoded decode_message(std::span<const std::uint8_t> bytes, const ActionSpace& space = ActionSpace());

// Reassembles frames from an arbitrarily fragmented byte stream.
class FrameAssembler {
public:
    void feed(std::span<const std::uint8_t> bytes);
    // Next complete frame (prefix included); throws ProtocolError on an
    // oversized length prefix.
    std::optional<Bytes> next_frame();
    std::size_t buffered() const { return buf_.size() - head_; }

private:
    Bytes buf_;
    std::size_t head_ = 0;
};

// Ordered full-duplex message pipe. send() never blocks on the peer's
// receive path.
class Channel {
public:
    virtual ~Channel() = default;

    virtual void send(const Message& msg) = 0;
    // Next message if one is already queued. Rethrows decode errors for the
    // frame at the head of the queue (the frame is consumed).
    virtual std::optional<Message> try_recv() = 0;
    // Waits up to `timeout`; empty on timeout or when the peer is gone.
    virtual std::optional<Message> recv_for(std::chrono::milliseconds timeout) = 0;
    virtual void close() = 0;
    // False once either side closed and every queued frame has been read.
    virtual bool is_open() const = 0;
};

// Thread-safe queue of whole frames shared by the channel implementations.
class FrameQueue {
public:
    void push(Bytes frame);
    std::optional<Bytes> try_pop();
    std::optional<Bytes> pop_for(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;
    bool drained() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Bytes> frames_;
    bool closed_ = false;
};

// Both ends of an in-process channel.
std::pair<std::shared_ptr<Channel>, std::shared_ptr<Channel>> make_inproc_pair(ActionSpace space = ActionSpace());

class TcpChannel final : public Channel {
public:
    // Takes ownership of a connected socket.
    explicit TcpChannel(int fd, ActionSpace space = ActionSpace());
    ~TcpChannel() override;

    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    void send(const Message& msg) override;
    std::optional<Message> try_recv() override;
    std::optional<Message> recv_for(std::chrono::milliseconds timeout) override;
    void close() override;
    bool is_open() const override;

private:
    void read_loop();

    int fd_;
    ActionSpace space_;
    std::mutex send_mu_;
    FrameQueue inbound_;
    std::thread reader_;
};

// Throws TransportError when the connection cannot be made.
std::shared_ptr<Channel> connect_tcp(const std::string& host, std::uint16_t port,
                                     ActionSpace space = ActionSpace());

class TcpListener {
public:
    // Port 0 binds an ephemeral port. Throws TransportError if the address is
    // in use.
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    // Empty on timeout or after close().
    std::shared_ptr<Channel> accept_for(std::chrono::milliseconds timeout, ActionSpace space = ActionSpace());
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace ranslice::e2
