#pragma once

#include <cstdint>
#include <string_view>

namespace sufforge {

/// Packed identity of one suffix: seq * 1000 + offset.
struct SuffixIndex {
    std::uint64_t packed = 0;

    friend constexpr auto operator<=>(SuffixIndex, SuffixIndex) = default;
};

struct UnpackedIndex {
    std::uint64_t seq = 0;
    std::uint32_t offset = 0;

    friend constexpr bool operator==(UnpackedIndex, UnpackedIndex) = default;
};

inline constexpr std::uint32_t kOffsetRadix = 1000;
inline constexpr std::uint32_t kMaxOffset = kOffsetRadix - 1;
inline constexpr std::uint64_t kMaxSeq = (UINT64_MAX - kMaxOffset) / kOffsetRadix;

/// Longest prefix whose base-5 code fits in an unsigned 64-bit word.
inline constexpr int kMaxPrefixLen = 27;
inline constexpr int kDefaultPrefixLen = 23;

/// Throws RangeError when offset > 999 or seq would overflow the packing.
SuffixIndex pack_index(std::uint64_t seq, std::int64_t offset);

constexpr UnpackedIndex unpack_index(SuffixIndex idx) noexcept {
    return {idx.packed / kOffsetRadix, static_cast<std::uint32_t>(idx.packed % kOffsetRadix)};
}

/// Digit of one symbol: $=0, A=1, C=2, G=3, T=4; -1 for anything else.
constexpr int symbol_digit(char c) noexcept {
    switch (c) {
    case '$': return 0;
    case 'A': return 1;
    case 'C': return 2;
    case 'G': return 3;
    case 'T': return 4;
    default: return -1;
    }
}

constexpr char digit_symbol(int d) noexcept { return "$ACGT"[d]; }

/// 5^n for n in [0, 27].
std::uint64_t pow5(int n);

/// Base-5 code of the first min(L, |suffix|) symbols, right-padded with '$'
/// digits to L places. Order-preserving over '$'-terminated suffixes.
///
/// Throws EncodingError on a symbol outside {A,C,G,T,$} or a '$' that is not
/// the final character, and RangeError when L is outside [1, 27].
std::uint64_t encode_prefix(std::string_view suffix, int prefix_len);

/// Same as encode_prefix without validation; the caller guarantees a
/// well-formed terminated suffix. Used on the map hot path.
std::uint64_t encode_prefix_unchecked(std::string_view suffix, int prefix_len) noexcept;

/// True when the code covers the whole suffix, i.e. its terminator falls
/// inside the L-digit window. Two suffixes sharing such a code are equal.
constexpr bool code_is_complete(std::uint64_t code) noexcept { return code % 5 == 0; }

/// Largest L with 5^L - 1 <= 2^key_bits - 1.
int max_prefix_length(int key_bits);

} // namespace sufforge
