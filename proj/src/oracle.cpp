#include "sufforge/oracle.hpp"

#include "sufforge/error.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <random>
#include <unordered_set>

namespace sufforge {

namespace {

int symbol_rank(char c) noexcept { return c == '$' ? -1 : static_cast<unsigned char>(c); }

} // namespace

bool suffix_less(std::string_view a, SuffixIndex ia, std::string_view b, SuffixIndex ib) noexcept {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int ra = symbol_rank(a[i]), rb = symbol_rank(b[i]);
        if (ra != rb)
            return ra < rb;
    }
    if (a.size() != b.size())
        return a.size() < b.size();
    return ia < ib;
}

std::vector<OracleEntry> naive_sa(std::span<const Read> reads) {
    std::unordered_set<std::uint64_t> seen;
    std::size_t total = 0;
    for (const auto& r : reads) {
        if (!seen.insert(r.seq).second)
            throw IngestError("duplicate sequence number " + std::to_string(r.seq));
        if (r.text.empty() || r.text.back() != '$' || r.text.find('$') != r.text.size() - 1)
            throw IngestError("read " + std::to_string(r.seq) + " is not '$'-terminated");
        total += r.text.size();
    }
    std::vector<OracleEntry> entries;
    entries.reserve(total);
    for (const auto& r : reads)
        for (std::size_t off = 0; off < r.text.size(); ++off)
            entries.push_back({r.text.substr(off), pack_index(r.seq, static_cast<std::int64_t>(off))});
    std::sort(entries.begin(), entries.end(), [](const OracleEntry& x, const OracleEntry& y) {
        return suffix_less(x.suffix, x.index, y.suffix, y.index);
    });
    return entries;
}

void write_sa_lines(std::ostream& out, std::span<const OracleEntry> entries, bool indexes_only) {
    for (const auto& e : entries) {
        if (!indexes_only)
            out << e.suffix << '\t';
        out << e.index.packed << '\n';
    }
}

std::vector<Read> gen_reads(const GenOptions& options) {
    if (options.count == 0)
        throw ConfigError("read count must be at least 1");
    if (options.length < 1 || options.length > kMaxReadLength - 2)
        throw ConfigError("read length must be in [1, 998]");
    std::mt19937_64 rng(options.seed);
    std::vector<Read> reads(options.count);
    for (std::size_t i = 0; i < options.count; ++i) {
        reads[i].seq = i;
        reads[i].text.resize(options.length + 1);
        for (std::size_t j = 0; j < options.length; ++j)
            reads[i].text[j] = "ACGT"[rng() >> 62];
        reads[i].text.back() = '$';
    }
    return reads;
}

std::vector<Read> paired_mates(std::span<const Read> reads) {
    std::vector<Read> mates;
    mates.reserve(reads.size());
    for (const auto& r : reads) {
        Read m;
        m.seq = r.seq + reads.size();
        m.text.assign(r.text.rbegin() + 1, r.text.rend());
        m.text.push_back('$');
        mates.push_back(std::move(m));
    }
    return mates;
}

void write_reads_tsv(const std::filesystem::path& path, std::span<const Read> reads) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    for (const auto& r : reads) {
        std::string_view body = r.text;
        if (!body.empty() && body.back() == '$')
            body.remove_suffix(1);
        out << r.seq << '\t' << body << '\n';
    }
    if (!out)
        throw ConfigError("write to " + path.string() + " failed");
}

} // namespace sufforge
