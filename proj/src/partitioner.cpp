#include "sufforge/partitioner.hpp"

#include "sufforge/encoding.hpp"
#include "sufforge/error.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <string>

namespace sufforge {

PartitionTable::PartitionTable(std::vector<std::uint64_t> boundaries) : boundaries_(std::move(boundaries)) {
    if (!std::is_sorted(boundaries_.begin(), boundaries_.end()))
        throw ConfigError("partition boundaries must be sorted ascending");
}

std::size_t PartitionTable::partition_of(std::uint64_t code) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(boundaries_.begin(), boundaries_.end(), code) -
                                    boundaries_.begin());
}

void PartitionTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write partition table " + path.string());
    for (auto b : boundaries_)
        out << b << '\n';
}

PartitionTable PartitionTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read partition table " + path.string());
    std::vector<std::uint64_t> bounds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        try {
            std::size_t used = 0;
            bounds.push_back(std::stoull(line, &used));
            if (used != line.size())
                throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a decimal code");
        }
    }
    return PartitionTable(std::move(bounds));
}

std::vector<std::uint64_t> sample_suffix_codes(std::span<const Read> reads, std::size_t partitions,
                                               std::size_t per, int prefix_len, std::uint64_t seed) {
    if (reads.empty())
        throw ConfigError("cannot sample suffixes from empty input");
    if (partitions == 0 || per == 0)
        throw ConfigError("partition and sample counts must be positive");

    // Cumulative suffix counts let one uniform draw pick a (read, offset) pair.
    std::vector<std::uint64_t> cumulative;
    cumulative.reserve(reads.size());
    std::uint64_t total = 0;
    for (const auto& r : reads) {
        total += r.text.size();
        cumulative.push_back(total);
    }
    if (total == 0)
        throw ConfigError("cannot sample suffixes from empty reads");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    const std::size_t n = partitions * per;
    std::vector<std::uint64_t> codes;
    codes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t pos = pick(rng);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pos);
        const auto& read = reads[static_cast<std::size_t>(it - cumulative.begin())];
        const std::uint64_t start = *it - read.text.size();
        const auto suffix = std::string_view(read.text).substr(static_cast<std::size_t>(pos - start));
        codes.push_back(encode_prefix_unchecked(suffix, prefix_len));
    }
    return codes;
}

PartitionTable build_partition_table(std::vector<std::uint64_t> samples, std::size_t partitions) {
    if (partitions == 0)
        throw ConfigError("partition count must be positive");
    if (samples.empty() || samples.size() % partitions != 0)
        throw ConfigError(std::to_string(samples.size()) + " samples cannot be split evenly into " +
                          std::to_string(partitions) + " partitions");
    const std::size_t per = samples.size() / partitions;
    std::sort(samples.begin(), samples.end());
    std::vector<std::uint64_t> bounds;
    bounds.reserve(partitions - 1);
    for (std::size_t r = 1; r < partitions; ++r)
        bounds.push_back(samples[r * per - 1]); // rank r*per, 1-based
    return PartitionTable(std::move(bounds));
}

} // namespace sufforge
