#pragma once

#include "sufforge/footprint_model.hpp"
#include "sufforge/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace sufforge {

/// JSON rendering of a run: config echo, raw counters, input- and
/// output-referenced unit tables, per-worker stats and timings.
std::string report_to_json(const RunReport& report, int indent = 2);

/// Reloads the parts of a saved report needed for re-normalization (config,
/// counters, sizes). Throws ConfigError on malformed input.
RunReport report_from_json(const std::string& text);
RunReport load_report(const std::filesystem::path& path);

/// Tabular rendering of a unit table: one row per metric, one column per
/// phase, zero rows omitted.
void print_unit_table(std::ostream& out, const UnitTable& table);

} // namespace sufforge
