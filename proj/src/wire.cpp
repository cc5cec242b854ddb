#include "sufforge/wire.hpp"

#include <algorithm>
#include <optional>

namespace sufforge::wire {

namespace {

class Writer {
public:
    explicit Writer(std::uint8_t tag) {
        buf_.resize(4);
        buf_.push_back(tag);
    }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void bytes(std::span<const std::uint8_t> s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    Bytes finish() && {
        if (buf_.size() > kMaxFrameSize)
            throw ProtocolError("frame of " + std::to_string(buf_.size()) + " bytes exceeds limit");
        const auto n = static_cast<std::uint32_t>(buf_.size());
        for (int i = 0; i < 4; ++i)
            buf_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(n >> (24 - 8 * i));
        return std::move(buf_);
    }

private:
    void put(std::uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i)
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> body) : body_(body) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }

    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(body_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return body_.size() - pos_; }

    void expect_end() const {
        if (pos_ != body_.size())
            throw ProtocolError(std::to_string(body_.size() - pos_) + " trailing bytes in frame");
    }

private:
    void need(std::size_t n) const {
        if (body_.size() - pos_ < n)
            throw ProtocolError("truncated frame");
    }

    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v = (v << 8) | body_[pos_++];
        return v;
    }

    std::span<const std::uint8_t> body_;
    std::size_t pos_ = 0;
};

// Validates the header and returns (tag byte, payload).
std::pair<std::uint8_t, std::span<const std::uint8_t>> split_frame(std::span<const std::uint8_t> frame) {
    if (frame.size() < kHeaderSize)
        throw ProtocolError("frame shorter than its header");
    const std::uint32_t n = frame_length(frame.first<4>());
    if (n != frame.size())
        throw ProtocolError("frame length field " + std::to_string(n) + " disagrees with " +
                            std::to_string(frame.size()) + " bytes received");
    return {frame[4], frame.subspan(kHeaderSize)};
}

} // namespace

std::uint32_t frame_length(std::span<const std::uint8_t, 4> prefix) {
    return (std::uint32_t{prefix[0]} << 24) | (std::uint32_t{prefix[1]} << 16) |
           (std::uint32_t{prefix[2]} << 8) | std::uint32_t{prefix[3]};
}

Bytes encode_request(const Request& request) {
    return std::visit(
        [](const auto& req) -> Bytes {
            using T = std::decay_t<decltype(req)>;
            if constexpr (std::is_same_v<T, MputRequest>) {
                Writer w(static_cast<std::uint8_t>(Opcode::mput));
                w.u32(static_cast<std::uint32_t>(req.reads.size()));
                for (const auto& r : req.reads) {
                    if (r.text.size() > UINT16_MAX)
                        throw ProtocolError("read text too long for a u16 length");
                    w.u64(r.seq);
                    w.u16(static_cast<std::uint16_t>(r.text.size()));
                    w.bytes(r.text);
                }
                return std::move(w).finish();
            } else if constexpr (std::is_same_v<T, GetRequest>) {
                Writer w(static_cast<std::uint8_t>(Opcode::get));
                w.u64(req.seq);
                return std::move(w).finish();
            } else {
                Writer w(static_cast<std::uint8_t>(Opcode::mget_suffix));
                w.u32(static_cast<std::uint32_t>(req.indexes.size()));
                for (auto idx : req.indexes)
                    w.u64(idx.packed);
                return std::move(w).finish();
            }
        },
        request);
}

Request decode_request(std::span<const std::uint8_t> frame) {
    auto [tag, payload] = split_frame(frame);
    Reader r(payload);
    switch (static_cast<Opcode>(tag)) {
    case Opcode::mput: {
        MputRequest req;
        const std::uint32_t count = r.u32();
        // Each item carries at least 10 bytes, so a bogus count cannot force a huge reserve.
        req.reads.reserve(std::min<std::size_t>(count, r.remaining() / 10));
        for (std::uint32_t i = 0; i < count; ++i) {
            Read read;
            read.seq = r.u64();
            read.text = r.str(r.u16());
            req.reads.push_back(std::move(read));
        }
        r.expect_end();
        return req;
    }
    case Opcode::get: {
        GetRequest req{r.u64()};
        r.expect_end();
        return req;
    }
    case Opcode::mget_suffix: {
        MgetSuffixRequest req;
        const std::uint32_t count = r.u32();
        if (r.remaining() != std::size_t{count} * 8)
            throw ProtocolError("MGETSUFFIX count does not match payload size");
        req.indexes.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i)
            req.indexes.push_back(SuffixIndex{r.u64()});
        return req;
    }
    }
    throw ProtocolError("unknown opcode " + std::to_string(tag));
}

Bytes encode_reply(Status status, std::span<const std::uint8_t> payload) {
    Writer w(static_cast<std::uint8_t>(status));
    w.bytes(payload);
    return std::move(w).finish();
}

Bytes encode_mput_reply(const MputAck& ack) {
    Writer w(static_cast<std::uint8_t>(Status::ok));
    w.u32(ack.stored);
    w.u32(static_cast<std::uint32_t>(ack.rejected.size()));
    for (const auto& rej : ack.rejected) {
        w.u32(rej.position);
        w.u8(static_cast<std::uint8_t>(rej.reason));
    }
    return std::move(w).finish();
}

Bytes encode_get_reply(const std::string* text) {
    if (!text)
        return encode_reply(Status::not_found);
    Writer w(static_cast<std::uint8_t>(Status::ok));
    w.bytes(*text);
    return std::move(w).finish();
}

Bytes encode_mget_reply(std::span<const SuffixItem> items) {
    Writer w(static_cast<std::uint8_t>(Status::ok));
    for (const auto& item : items) {
        if (item.status == ItemStatus::ok) {
            if (item.text.size() > INT16_MAX)
                throw ProtocolError("suffix too long for an i16 length");
            w.u16(static_cast<std::uint16_t>(item.text.size()));
            w.bytes(item.text);
        } else {
            w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(item.status)));
        }
    }
    return std::move(w).finish();
}

Status reply_status(std::span<const std::uint8_t> frame) {
    auto [tag, payload] = split_frame(frame);
    if (tag > static_cast<std::uint8_t>(Status::unknown_opcode))
        throw ProtocolError("unknown reply status " + std::to_string(tag));
    return static_cast<Status>(tag);
}

namespace {

std::span<const std::uint8_t> ok_payload(std::span<const std::uint8_t> frame) {
    auto [tag, payload] = split_frame(frame);
    if (tag != static_cast<std::uint8_t>(Status::ok))
        throw ProtocolError("shard replied with status " + std::to_string(tag));
    return payload;
}

} // namespace

MputAck decode_mput_reply(std::span<const std::uint8_t> frame) {
    Reader r(ok_payload(frame));
    MputAck ack;
    ack.stored = r.u32();
    const std::uint32_t rejected = r.u32();
    if (r.remaining() != std::size_t{rejected} * 5)
        throw ProtocolError("MPUT reply rejection count does not match payload size");
    for (std::uint32_t i = 0; i < rejected; ++i) {
        Rejection rej;
        rej.position = r.u32();
        rej.reason = static_cast<RejectReason>(r.u8());
        ack.rejected.push_back(rej);
    }
    return ack;
}

std::optional<std::string> decode_get_reply(std::span<const std::uint8_t> frame) {
    auto [tag, payload] = split_frame(frame);
    if (tag == static_cast<std::uint8_t>(Status::not_found))
        return std::nullopt;
    if (tag != static_cast<std::uint8_t>(Status::ok))
        throw ProtocolError("shard replied with status " + std::to_string(tag));
    return std::string(reinterpret_cast<const char*>(payload.data()), payload.size());
}

std::vector<SuffixItem> decode_mget_reply(std::span<const std::uint8_t> frame, std::size_t count) {
    Reader r(ok_payload(frame));
    std::vector<SuffixItem> items;
    items.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto len = static_cast<std::int16_t>(r.u16());
        if (len >= 0) {
            items.push_back({ItemStatus::ok, r.str(static_cast<std::size_t>(len))});
        } else if (len == static_cast<std::int16_t>(ItemStatus::not_found) ||
                   len == static_cast<std::int16_t>(ItemStatus::range_error)) {
            items.push_back({static_cast<ItemStatus>(len), {}});
        } else {
            throw ProtocolError("invalid MGETSUFFIX item length " + std::to_string(len));
        }
    }
    r.expect_end();
    return items;
}

} // namespace sufforge::wire
