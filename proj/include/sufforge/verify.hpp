#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

namespace sufforge {

struct VerifyResult {
    std::uint64_t lines = 0;
    std::size_t part_files = 0;
};

/// Streams the concatenated part files under `dir` against the brute-force
/// suffix array of the inputs. Throws VerifyMismatch naming the first
/// differing line with both versions, or when either side runs out early.
VerifyResult verify_against_oracle(std::span<const std::filesystem::path> inputs, const std::filesystem::path& dir,
                                   bool indexes_only = false);

} // namespace sufforge
