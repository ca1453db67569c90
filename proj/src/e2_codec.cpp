#include <cmath>
#include <cstring>

#include "ranslice/e2bus.hpp"
#include "ranslice/errors.hpp"

namespace ranslice::e2 {

using nlohmann::json;

namespace {

// Integral values go out as JSON integers so that `"weight_pct":50` reads
// naturally; everything else keeps full double precision.
json number(double v) {
    if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 9.0e15) return static_cast<std::int64_t>(v);
    return v;
}

struct ToJson {
    json operator()(const Subscribe& m) const {
        return {{"type", "subscribe"}, {"report_period_ms", number(m.report_period_ms)}};
    }
    json operator()(const SubscribeAck& m) const {
        return {{"type", "subscribe_ack"}, {"subscription_id", m.subscription_id}};
    }
    json operator()(const Indication& m) const {
        return {{"type", "indication"}, {"subscription_id", m.subscription_id}, {"kpm", m.record}};
    }
    json operator()(const Control& m) const { return {{"type", "control"}, {"weight_pct", number(m.weight_pct)}}; }
    json operator()(const ControlAck& m) const {
        return {{"type", "control_ack"}, {"applied", m.applied}, {"slot_index", m.slot_index}};
    }
};

Message from_body(const json& j, const ActionSpace& space) {
    if (!j.is_object()) throw ProtocolError("E2 body must be a JSON object");
    const auto t = j.find("type");
    if (t == j.end() || !t->is_string()) throw ProtocolError("E2 body has no \"type\" field");
    const auto& type = t->get_ref<const std::string&>();
    if (type == "subscribe") {
        Subscribe m{j.at("report_period_ms").get<double>()};
        if (!(m.report_period_ms > 0.0)) throw ValidationError("report period must be positive");
        return m;
    }
    if (type == "subscribe_ack") return SubscribeAck{j.at("subscription_id").get<std::uint32_t>()};
    if (type == "indication") {
        Indication m{j.at("subscription_id").get<std::uint32_t>(), j.at("kpm").get<KpmRecord>()};
        validate(m.record);
        return m;
    }
    if (type == "control") {
        Control m{j.at("weight_pct").get<double>()};
        if (!space.contains(m.weight_pct))
            throw ValidationError("control weight " + std::to_string(m.weight_pct) + "% is not in the action space");
        return m;
    }
    if (type == "control_ack") return ControlAck{j.at("applied").get<bool>(), j.at("slot_index").get<std::uint64_t>()};
    throw ProtocolError("unknown E2 message type \"" + type + "\"");
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

}  // namespace

const char* type_name(const Message& msg) {
    static constexpr const char* names[] = {"subscribe", "subscribe_ack", "indication", "control", "control_ack"};
    return names[msg.index()];
}

Bytes encode_message(const Message& msg) {
    const std::string body = std::visit(ToJson{}, msg).dump();
    if (body.size() > kMaxFrameBytes) throw ProtocolError("E2 message exceeds the frame limit");
    const auto n = static_cast<std::uint32_t>(body.size());
    Bytes out;
    out.reserve(4 + body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Decoded decode_message(std::span<const std::uint8_t> bytes, const ActionSpace& space) {
    if (bytes.size() < 4) return {};
    const auto n = read_be32(bytes.data());
    if (n > kMaxFrameBytes) throw ProtocolError("E2 frame length " + std::to_string(n) + " exceeds the limit");
    if (bytes.size() < 4 + std::size_t{n}) return {};
    const auto body = bytes.subspan(4, n);
    json j;
    try {
        j = json::parse(body.begin(), body.end());
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed E2 body: ") + e.what());
    }
    try {
        return {from_body(j, space), 4 + std::size_t{n}};
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("invalid E2 body: ") + e.what());
    }
}

void FrameAssembler::feed(std::span<const std::uint8_t> bytes) {
    if (head_ > 0 && head_ == buf_.size()) {
        buf_.clear();
        head_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Bytes> FrameAssembler::next_frame() {
    const std::size_t avail = buf_.size() - head_;
    if (avail < 4) return std::nullopt;
    const auto n = read_be32(buf_.data() + head_);
    if (n > kMaxFrameBytes) throw ProtocolError("E2 frame length " + std::to_string(n) + " exceeds the limit");
    if (avail < 4 + std::size_t{n}) return std::nullopt;
    Bytes frame(buf_.begin() + static_cast<std::ptrdiff_t>(head_),
                buf_.begin() + static_cast<std::ptrdiff_t>(head_ + 4 + n));
    head_ += 4 + n;
    // Compact once the consumed prefix dominates the buffer.
    if (head_ > 4096 && head_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
    return frame;
}

}  // namespace ranslice::e2
