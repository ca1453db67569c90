#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "ranslice/e2bus.hpp"
#include "ranslice/errors.hpp"

namespace ranslice::e2 {

void FrameQueue::push(Bytes frame) {
    {
        std::lock_guard lk(mu_);
        if (closed_) throw TransportError("channel is closed");
        frames_.push_back(std::move(frame));
    }
    cv_.notify_one();
}

std::optional<Bytes> FrameQueue::try_pop() {
    std::lock_guard lk(mu_);
    if (frames_.empty()) return std::nullopt;
    Bytes f = std::move(frames_.front());
    frames_.pop_front();
    return f;
}

std::optional<Bytes> FrameQueue::pop_for(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, timeout, [&] { return !frames_.empty() || closed_; });
    if (frames_.empty()) return std::nullopt;
    Bytes f = std::move(frames_.front());
    frames_.pop_front();
    return f;
}

void FrameQueue::close() {
    {
        std::lock_guard lk(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool FrameQueue::closed() const {
    std::lock_guard lk(mu_);
    return closed_;
}

bool FrameQueue::drained() const {
    std::lock_guard lk(mu_);
    return frames_.empty();
}

namespace {

Message decode_frame(const Bytes& frame, const ActionSpace& space) {
    auto d = decode_message(frame, space);
    if (!d.message) throw ProtocolError("incomplete frame in queue");
    return std::move(*d.message);
}

class InProcChannel final : public Channel {
public:
    InProcChannel(std::shared_ptr<FrameQueue> in, std::shared_ptr<FrameQueue> out, ActionSpace space)
        : in_(std::move(in)), out_(std::move(out)), space_(std::move(space)) {}
    ~InProcChannel() override { close(); }

    void send(const Message& msg) override { out_->push(encode_message(msg)); }

    std::optional<Message> try_recv() override {
        auto f = in_->try_pop();
        if (!f) return std::nullopt;
        return decode_frame(*f, space_);
    }

    std::optional<Message> recv_for(std::chrono::milliseconds timeout) override {
        auto f = in_->pop_for(timeout);
        if (!f) return std::nullopt;
        return decode_frame(*f, space_);
    }

    void close() override {
        // Either side closing tears down both directions; queued frames stay
        // readable.
        in_->close();
        out_->close();
    }

    bool is_open() const override { return !(in_->closed() && in_->drained()); }

private:
    std::shared_ptr<FrameQueue> in_, out_;
    ActionSpace space_;
};

std::string errno_text() { return std::strerror(errno); }

}  // namespace

std::pair<std::shared_ptr<Channel>, std::shared_ptr<Channel>> make_inproc_pair(ActionSpace space) {
    auto ab = std::make_shared<FrameQueue>();
    auto ba = std::make_shared<FrameQueue>();
    return {std::make_shared<InProcChannel>(ba, ab, space), std::make_shared<InProcChannel>(ab, ba, space)};
}

TcpChannel::TcpChannel(int fd, ActionSpace space) : fd_(fd), space_(std::move(space)) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    reader_ = std::thread([this] { read_loop(); });
}

TcpChannel::~TcpChannel() { close(); }

void TcpChannel::read_loop() {
    FrameAssembler assembler;
    std::uint8_t buf[64 * 1024];
    for (;;) {
        const auto n = ::recv(fd_, buf, sizeof(buf), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        assembler.feed({buf, static_cast<std::size_t>(n)});
        try {
            while (auto f = assembler.next_frame()) inbound_.push(std::move(*f));
        } catch (const Error&) {
            // Oversized length prefix: the stream cannot be resynchronised.
            break;
        }
    }
    inbound_.close();
}

void TcpChannel::send(const Message& msg) {
    const auto frame = encode_message(msg);
    std::lock_guard lk(send_mu_);
    if (fd_ < 0) throw TransportError("channel is closed");
    std::size_t off = 0;
    while (off < frame.size()) {
        const auto n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw TransportError("send failed: " + errno_text());
        off += static_cast<std::size_t>(n);
    }
}

std::optional<Message> TcpChannel::try_recv() {
    auto f = inbound_.try_pop();
    if (!f) return std::nullopt;
    return decode_frame(*f, space_);
}

std::optional<Message> TcpChannel::recv_for(std::chrono::milliseconds timeout) {
    auto f = inbound_.pop_for(timeout);
    if (!f) return std::nullopt;
    return decode_frame(*f, space_);
}

void TcpChannel::close() {
    int fd;
    {
        std::lock_guard lk(send_mu_);
        fd = fd_;
        fd_ = -1;
    }
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
    if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
    if (fd >= 0) ::close(fd);
    inbound_.close();
}

bool TcpChannel::is_open() const { return !(inbound_.closed() && inbound_.drained()); }

std::shared_ptr<Channel> connect_tcp(const std::string& host, std::uint16_t port, ActionSpace space) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    int fd = -1;
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
    return std::make_shared<TcpChannel>(fd, std::move(space));
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("socket: " + errno_text());
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") addr.sin_addr.s_addr = htonl(INADDR_ANY);
    else if (host == "localhost") addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw TransportError("invalid listen address " + host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 8) != 0) {
        const auto why = errno_text();
        ::close(fd_);
        fd_ = -1;
        throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

std::shared_ptr<Channel> TcpListener::accept_for(std::chrono::milliseconds timeout, ActionSpace space) {
    if (fd_ < 0) return nullptr;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc <= 0 || !(p.revents & POLLIN)) return nullptr;
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) return nullptr;
    return std::make_shared<TcpChannel>(cfd, std::move(space));
}

}  // namespace ranslice::e2
