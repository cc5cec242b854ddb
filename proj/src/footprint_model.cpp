#include "sufforge/footprint_model.hpp"

#include "sufforge/error.hpp"

#include <cmath>
#include <string>

namespace sufforge {

SpillEstimate spill_count(double data_bytes, double buffer_bytes, double spill_fraction) {
    if (!(data_bytes > 0) || !(buffer_bytes > 0) || !(spill_fraction > 0) || spill_fraction > 1)
        throw ConfigError("spill estimate needs positive sizes and a fraction in (0, 1]");
    SpillEstimate est;
    est.raw = data_bytes / (buffer_bytes * spill_fraction);
    est.files = static_cast<std::uint64_t>(std::ceil(est.raw));
    return est;
}

MergePlan plan_merge(double spill_raw, std::uint64_t merge_factor) {
    if (!(spill_raw > 0))
        throw ConfigError("spill count must be positive");
    if (merge_factor < 2)
        throw ConfigError("merge factor must be at least 2");
    MergePlan plan;
    plan.spill_count_raw = spill_raw;
    plan.spill_count_files = static_cast<std::uint64_t>(std::ceil(spill_raw));
    const std::uint64_t s = plan.spill_count_files;
    const std::uint64_t f = merge_factor;
    if (s <= f) {
        plan.read_units = plan.write_units = 1.0;
        return plan;
    }
    const std::uint64_t k = (s - f + (f - 2)) / (f - 1);
    plan.intermediate_rounds = k;
    plan.files_consumed = s + k - f;
    plan.read_units = plan.write_units = 1.0 + static_cast<double>(plan.files_consumed) / spill_raw;
    return plan;
}

MapSideIo predict_map_side(double output_bytes, double buffer_bytes, double spill_fraction,
                           std::uint64_t merge_factor) {
    const auto spills = spill_count(output_bytes, buffer_bytes, spill_fraction);
    MapSideIo io;
    io.write_units = 1.0;
    if (spills.files > 1) {
        const auto plan = plan_merge(spills.raw, merge_factor);
        io.read_units = plan.read_units;
        io.write_units += plan.write_units;
    }
    return io;
}

UnitTable normalize(const FootprintCounters& counters, double reference_bytes) {
    if (!(reference_bytes > 0))
        throw ConfigError("normalization reference must be positive");
    UnitTable table;
    table.reference_bytes = reference_bytes;
    for (std::size_t p = 0; p < kPhaseCount; ++p)
        for (std::size_t m = 0; m < kMetricCount; ++m)
            table.units[p][m] = static_cast<double>(counters.bytes[p][m]) / reference_bytes;
    return table;
}

UnitTable normalize(const FootprintCounters& counters, UnitReference reference) {
    if (reference == UnitReference::input)
        return normalize(counters, static_cast<double>(counters.at(Phase::map, Metric::bytes_read_input)));
    return normalize(counters,
                     static_cast<double>(counters.at(Phase::output, Metric::bytes_output)) / kOutputReferenceUnits);
}

double efficiency(double speedup, double mem_ratio) {
    if (!(speedup > 0) || !(mem_ratio > 0))
        throw ConfigError("speedup and memory ratio must be positive");
    return 100.0 * speedup / mem_ratio;
}

double mem_ratio(double base_mem, double extra_mem) {
    if (!(base_mem > 0) || extra_mem < 0)
        throw ConfigError("base memory must be positive and extra memory non-negative");
    return (base_mem + extra_mem) / base_mem;
}

TimeModel fit_time_model(std::span<const std::pair<double, double>> points, std::optional<double> breakdown_hint) {
    double n = 0, sx = 0, sy = 0;
    for (auto [x, y] : points) {
        if (breakdown_hint && !(x < *breakdown_hint))
            continue;
        n += 1;
        sx += x;
        sy += y;
    }
    if (n < 2)
        throw ConfigError("time model needs at least two points below the breakdown, got " +
                          std::to_string(static_cast<int>(n)));
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (auto [x, y] : points) {
        if (breakdown_hint && !(x < *breakdown_hint))
            continue;
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0)
        throw ConfigError("time model needs at least two distinct input sizes");
    TimeModel model;
    model.a = sxy / sxx;
    model.b = my - model.a * mx;
    model.breakdown = breakdown_hint;
    return model;
}

} // namespace sufforge
