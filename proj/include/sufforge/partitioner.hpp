#pragma once

#include "sufforge/read.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sufforge {

inline constexpr std::size_t kDefaultSamplesPerPartition = 10000;

/// Sorted boundary codes routing prefix codes to range partitions.
/// Partition i holds codes in [boundaries[i-1], boundaries[i]).
class PartitionTable {
public:
    PartitionTable() = default;
    /// Throws ConfigError unless boundaries are sorted ascending.
    explicit PartitionTable(std::vector<std::uint64_t> boundaries);

    std::size_t partitions() const noexcept { return boundaries_.size() + 1; }
    const std::vector<std::uint64_t>& boundaries() const noexcept { return boundaries_; }

    /// Smallest i with code < boundaries[i], or partitions() - 1.
    std::size_t partition_of(std::uint64_t code) const noexcept;

    /// One decimal boundary per line.
    void save(const std::filesystem::path& path) const;
    static PartitionTable load(const std::filesystem::path& path);

    friend bool operator==(const PartitionTable&, const PartitionTable&) = default;

private:
    std::vector<std::uint64_t> boundaries_;
};

/// Draws partitions * per prefix codes from (read, offset) positions chosen
/// uniformly at random with a seeded generator. Throws ConfigError on empty
/// input or zero counts.
std::vector<std::uint64_t> sample_suffix_codes(std::span<const Read> reads, std::size_t partitions,
                                               std::size_t per, int prefix_len, std::uint64_t seed);

/// Sorts the samples and picks the codes at ranks per, 2*per, ...,
/// (partitions-1)*per. Throws ConfigError when the sample count is not a
/// positive multiple of partitions.
PartitionTable build_partition_table(std::vector<std::uint64_t> samples, std::size_t partitions);

} // namespace sufforge
