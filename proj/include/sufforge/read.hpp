#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sufforge {

inline constexpr std::size_t kMaxReadLength = 1000; // including '$'

/// A '$'-terminated DNA read with a globally unique sequence number.
struct Read {
    std::uint64_t seq = 0;
    std::string text;

    friend bool operator==(const Read&, const Read&) = default;
};

/// Why a read text is malformed, or nullopt when it is valid: A/C/G/T body,
/// exactly one trailing '$', total length in [1, 1000].
std::optional<std::string> read_text_problem(std::string_view text);

inline bool is_valid_read_text(std::string_view text) { return !read_text_problem(text); }

/// Throws IngestError when the read is malformed.
void validate_read(const Read& read);

} // namespace sufforge
