#pragma once

// Binary protocol spoken between store clients and shards. Every integer is
// big-endian.
//
//   request := u32 total_length | u8 opcode | payload
//     MPUT        0x01  u32 count, count x (u64 seq, u16 len, len bytes)
//     GET         0x02  u64 seq
//     MGETSUFFIX  0x03  u32 count, count x u64 packed index
//   reply   := u32 total_length | u8 status | payload
//     MPUT        u32 stored, u32 rejected, rejected x (u32 position, u8 reason)
//     GET         text bytes (status 1 when absent)
//     MGETSUFFIX  count x (i16 len, len bytes); len -1 not found, -2 bad offset
//
// total_length counts the whole frame including the length field itself.

#include "sufforge/encoding.hpp"
#include "sufforge/read.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sufforge::wire {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::uint32_t kMaxFrameSize = 1u << 30;

enum class Opcode : std::uint8_t { mput = 0x01, get = 0x02, mget_suffix = 0x03 };

enum class Status : std::uint8_t { ok = 0, not_found = 1, bad_request = 2, unknown_opcode = 3 };

enum class RejectReason : std::uint8_t { invalid_read = 1, wrong_shard = 2 };

enum class ItemStatus : std::int16_t { ok = 0, not_found = -1, range_error = -2 };

struct MputRequest {
    std::vector<Read> reads;
    friend bool operator==(const MputRequest&, const MputRequest&) = default;
};

struct GetRequest {
    std::uint64_t seq = 0;
    friend bool operator==(const GetRequest&, const GetRequest&) = default;
};

struct MgetSuffixRequest {
    std::vector<SuffixIndex> indexes;
    friend bool operator==(const MgetSuffixRequest&, const MgetSuffixRequest&) = default;
};

using Request = std::variant<MputRequest, GetRequest, MgetSuffixRequest>;

struct Rejection {
    std::uint32_t position = 0;
    RejectReason reason = RejectReason::invalid_read;
    friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct MputAck {
    std::uint32_t stored = 0;
    std::vector<Rejection> rejected;
    friend bool operator==(const MputAck&, const MputAck&) = default;
};

struct SuffixItem {
    ItemStatus status = ItemStatus::ok;
    std::string text;
    friend bool operator==(const SuffixItem&, const SuffixItem&) = default;
};

/// Thrown on frames that do not parse. Clients surface it as a transport
/// failure; shards answer it with Status::bad_request.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Bytes encode_request(const Request& request);
Request decode_request(std::span<const std::uint8_t> frame);

Bytes encode_reply(Status status, std::span<const std::uint8_t> payload = {});
Bytes encode_mput_reply(const MputAck& ack);
Bytes encode_get_reply(const std::string* text);
Bytes encode_mget_reply(std::span<const SuffixItem> items);

/// Status byte of a reply frame; validates the header.
Status reply_status(std::span<const std::uint8_t> frame);

MputAck decode_mput_reply(std::span<const std::uint8_t> frame);
/// Empty optional when the shard answered not-found.
std::optional<std::string> decode_get_reply(std::span<const std::uint8_t> frame);
std::vector<SuffixItem> decode_mget_reply(std::span<const std::uint8_t> frame, std::size_t count);

/// Reads the u32 length prefix of a frame header.
std::uint32_t frame_length(std::span<const std::uint8_t, 4> prefix);

} // namespace sufforge::wire
