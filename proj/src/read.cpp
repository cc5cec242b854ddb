#include "sufforge/read.hpp"

#include "sufforge/error.hpp"

namespace sufforge {

std::optional<std::string> read_text_problem(std::string_view text) {
    if (text.empty())
        return "empty read";
    if (text.size() > kMaxReadLength)
        return "read of length " + std::to_string(text.size()) + " exceeds " +
               std::to_string(kMaxReadLength) + " (including '$')";
    if (text.back() != '$')
        return "read is not '$'-terminated";
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        switch (text[i]) {
        case 'A':
        case 'C':
        case 'G':
        case 'T':
            break;
        default:
            return std::string("invalid character '") + text[i] + "' at position " + std::to_string(i);
        }
    }
    return std::nullopt;
}

void validate_read(const Read& read) {
    if (auto problem = read_text_problem(read.text))
        throw IngestError("read " + std::to_string(read.seq) + ": " + *problem);
}

} // namespace sufforge
