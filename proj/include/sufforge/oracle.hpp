#pragma once

#include "sufforge/encoding.hpp"
#include "sufforge/read.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sufforge {

struct OracleEntry {
    std::string suffix;
    SuffixIndex index;

    friend bool operator==(const OracleEntry&, const OracleEntry&) = default;
};

/// Suffix order: '$' below every other symbol, then byte order; equal texts
/// fall back to ascending packed index.
bool suffix_less(std::string_view a, SuffixIndex ia, std::string_view b, SuffixIndex ib) noexcept;

/// Brute-force suffix array: every suffix of every '$'-terminated read,
/// comparison-sorted with suffix_less. Throws IngestError on a duplicate seq
/// or a read that is not '$'-terminated. Symbols other than A/C/G/T are
/// tolerated so small golden texts can use their own alphabet.
std::vector<OracleEntry> naive_sa(std::span<const Read> reads);

/// One output line per entry: "suffix<TAB>index", or just the index.
void write_sa_lines(std::ostream& out, std::span<const OracleEntry> entries, bool indexes_only = false);

struct GenOptions {
    std::size_t count = 1;
    std::size_t length = 100;
    std::uint64_t seed = 0;
};

/// Uniform A/C/G/T reads of fixed length, '$' appended, seq 0..count-1.
/// Throws ConfigError when count is 0 or length is outside [1, 998].
std::vector<Read> gen_reads(const GenOptions& options);

/// Paired-end mate file: each read reversed, seq shifted by reads.size().
std::vector<Read> paired_mates(std::span<const Read> reads);

/// "seq<TAB>read" lines, terminator stripped.
void write_reads_tsv(const std::filesystem::path& path, std::span<const Read> reads);

} // namespace sufforge
