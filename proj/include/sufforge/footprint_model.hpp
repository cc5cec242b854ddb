#pragma once

#include "sufforge/counters.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

namespace sufforge {

struct SpillEstimate {
    double raw = 0;          // data / (buffer * fraction)
    std::uint64_t files = 0; // ceil(raw)
};

/// Throws ConfigError unless every argument is positive and fraction <= 1.
SpillEstimate spill_count(double data_bytes, double buffer_bytes, double spill_fraction);

/// Local-disk cost of merging spilled files down to one sorted stream, in
/// units of the data volume being merged.
struct MergePlan {
    double spill_count_raw = 0;
    std::uint64_t spill_count_files = 0;
    std::uint64_t intermediate_rounds = 0;
    std::uint64_t files_consumed = 0;
    double read_units = 0;
    double write_units = 0;
};

/// With s = ceil(spill_raw) files and merge factor f: no intermediate round
/// when s <= f; otherwise k = ceil((s-f)/(f-1)) rounds consume c = s+k-f
/// files and both read and write cost 1 + c/spill_raw units.
/// Throws ConfigError when spill_raw <= 0 or f < 2.
MergePlan plan_merge(double spill_raw, std::uint64_t merge_factor);

/// Predicted map-side local I/O in units of map output: spills are written
/// once, and when more than one spill exists they are merged per plan_merge.
struct MapSideIo {
    double read_units = 0;
    double write_units = 0;
};
MapSideIo predict_map_side(double output_bytes, double buffer_bytes, double spill_fraction,
                           std::uint64_t merge_factor);

struct UnitTable {
    double reference_bytes = 0;
    std::array<std::array<double, kMetricCount>, kPhaseCount> units{};

    double at(Phase p, Metric m) const noexcept {
        return units[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)];
    }
};

enum class UnitReference { input, output };

/// Output-referenced tables pin the output volume at this many units.
inline constexpr double kOutputReferenceUnits = 1.01;

/// Divides every counter by reference_bytes. Throws ConfigError when the
/// reference is not positive.
UnitTable normalize(const FootprintCounters& counters, double reference_bytes);

/// Input-referenced: input read = 1 unit. Output-referenced: output written
/// = 1.01 units.
UnitTable normalize(const FootprintCounters& counters, UnitReference reference);

/// 100 * speedup / mem_ratio.
double efficiency(double speedup, double mem_ratio);

/// (base + extra) / base.
double mem_ratio(double base_mem, double extra_mem);

/// t(x) = a*x + b below the breakdown size, undefined beyond it.
struct TimeModel {
    double a = 0;
    double b = 0;
    std::optional<double> breakdown;

    std::optional<double> predict(double x) const {
        if (breakdown && x >= *breakdown)
            return std::nullopt;
        return a * x + b;
    }
};

/// Ordinary least squares over the points with x < breakdown_hint (all
/// points when no hint). Throws ConfigError with fewer than two usable
/// points or when all usable x coincide.
TimeModel fit_time_model(std::span<const std::pair<double, double>> points,
                         std::optional<double> breakdown_hint = std::nullopt);

} // namespace sufforge
