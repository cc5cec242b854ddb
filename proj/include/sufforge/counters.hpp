#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace sufforge {

enum class Phase : std::size_t { map, shuffle, reduce, store, output };
inline constexpr std::size_t kPhaseCount = 5;
inline constexpr std::array<std::string_view, kPhaseCount> kPhaseNames{"map", "shuffle", "reduce", "store",
                                                                        "output"};

enum class Metric : std::size_t {
    bytes_read_input,
    bytes_read_local,
    bytes_written_local,
    bytes_shuffled,
    bytes_put_store,
    bytes_got_store,
    bytes_output,
};
inline constexpr std::size_t kMetricCount = 7;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames{
    "bytes_read_input", "bytes_read_local", "bytes_written_local", "bytes_shuffled",
    "bytes_put_store",  "bytes_got_store",  "bytes_output"};

/// Effective bytes moved per storage tier, split by phase. Workers keep
/// private copies and the driver sums them after each barrier, so totals do
/// not depend on thread interleaving.
struct FootprintCounters {
    std::array<std::array<std::uint64_t, kMetricCount>, kPhaseCount> bytes{};

    std::uint64_t& at(Phase p, Metric m) noexcept {
        return bytes[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)];
    }
    std::uint64_t at(Phase p, Metric m) const noexcept {
        return bytes[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)];
    }
    void add(Phase p, Metric m, std::uint64_t n) noexcept { at(p, m) += n; }

    FootprintCounters& operator+=(const FootprintCounters& other) noexcept {
        for (std::size_t p = 0; p < kPhaseCount; ++p)
            for (std::size_t m = 0; m < kMetricCount; ++m)
                bytes[p][m] += other.bytes[p][m];
        return *this;
    }

    friend bool operator==(const FootprintCounters&, const FootprintCounters&) = default;
};

} // namespace sufforge
