#include "sufforge/encoding.hpp"

#include "sufforge/error.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace sufforge {

namespace {

constexpr std::array<std::uint64_t, kMaxPrefixLen + 1> make_pow5() {
    std::array<std::uint64_t, kMaxPrefixLen + 1> p{};
    p[0] = 1;
    for (std::size_t i = 1; i < p.size(); ++i)
        p[i] = p[i - 1] * 5;
    return p;
}

constexpr auto kPow5 = make_pow5();

void check_prefix_len(int prefix_len) {
    if (prefix_len < 1 || prefix_len > kMaxPrefixLen)
        throw RangeError("prefix length " + std::to_string(prefix_len) + " outside [1, " +
                         std::to_string(kMaxPrefixLen) + "]");
}

} // namespace

SuffixIndex pack_index(std::uint64_t seq, std::int64_t offset) {
    if (offset < 0 || offset > kMaxOffset)
        throw RangeError("suffix offset " + std::to_string(offset) +
                         " outside [0, 999]; reads longer than 999 symbols are not supported");
    if (seq > kMaxSeq)
        throw RangeError("sequence number " + std::to_string(seq) + " too large to pack");
    return SuffixIndex{seq * kOffsetRadix + static_cast<std::uint64_t>(offset)};
}

std::uint64_t pow5(int n) {
    if (n < 0 || n > kMaxPrefixLen)
        throw RangeError("5^" + std::to_string(n) + " does not fit in 64 bits");
    return kPow5[static_cast<std::size_t>(n)];
}

std::uint64_t encode_prefix(std::string_view suffix, int prefix_len) {
    check_prefix_len(prefix_len);
    if (suffix.empty())
        throw EncodingError("cannot encode an empty suffix");
    for (std::size_t i = 0; i < suffix.size(); ++i) {
        const int d = symbol_digit(suffix[i]);
        if (d < 0)
            throw EncodingError(std::string("invalid symbol '") + suffix[i] + "' at position " +
                                std::to_string(i));
        if (d == 0 && i + 1 != suffix.size())
            throw EncodingError("'$' is only allowed as the final symbol (found at position " +
                                std::to_string(i) + ")");
    }
    return encode_prefix_unchecked(suffix, prefix_len);
}

std::uint64_t encode_prefix_unchecked(std::string_view suffix, int prefix_len) noexcept {
    const std::size_t n = std::min<std::size_t>(suffix.size(), static_cast<std::size_t>(prefix_len));
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < n; ++i)
        code = code * 5 + static_cast<std::uint64_t>(symbol_digit(suffix[i]));
    return code * kPow5[static_cast<std::size_t>(prefix_len) - n];
}

int max_prefix_length(int key_bits) {
    if (key_bits <= 0)
        return 0;
    // 5^L - 1 <= 2^bits - 1  <=>  5^L <= 2^bits.
    const unsigned __int128 limit = key_bits >= 127 ? ~static_cast<unsigned __int128>(0)
                                                    : static_cast<unsigned __int128>(1) << key_bits;
    int len = 0;
    unsigned __int128 p = 1;
    while (p <= limit / 5) {
        p *= 5;
        ++len;
    }
    return len;
}

} // namespace sufforge
