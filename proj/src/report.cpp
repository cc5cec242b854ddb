#include "sufforge/report.hpp"

#include "sufforge/error.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace sufforge {

using nlohmann::json;

namespace {

json counters_json(const FootprintCounters& c) {
    json j = json::object();
    for (std::size_t p = 0; p < kPhaseCount; ++p) {
        json phase = json::object();
        for (std::size_t m = 0; m < kMetricCount; ++m)
            phase[std::string(kMetricNames[m])] = c.bytes[p][m];
        j[std::string(kPhaseNames[p])] = std::move(phase);
    }
    return j;
}

FootprintCounters counters_from(const json& j) {
    FootprintCounters c;
    for (std::size_t p = 0; p < kPhaseCount; ++p) {
        const auto& phase = j.at(std::string(kPhaseNames[p]));
        for (std::size_t m = 0; m < kMetricCount; ++m)
            c.bytes[p][m] = phase.value(std::string(kMetricNames[m]), std::uint64_t{0});
    }
    return c;
}

json units_json(const UnitTable& t) {
    json j = json::object();
    j["reference_bytes"] = t.reference_bytes;
    for (std::size_t p = 0; p < kPhaseCount; ++p) {
        json phase = json::object();
        for (std::size_t m = 0; m < kMetricCount; ++m)
            if (t.units[p][m] != 0)
                phase[std::string(kMetricNames[m])] = t.units[p][m];
        j[std::string(kPhaseNames[p])] = std::move(phase);
    }
    return j;
}

json config_json(const PipelineConfig& c) {
    json inputs = json::array();
    for (const auto& p : c.inputs)
        inputs.push_back(p.string());
    return {
        {"mappers", c.mappers},
        {"reducers", c.reducers},
        {"shards", c.shards},
        {"prefix_len", c.prefix_len},
        {"threshold", c.threshold},
        {"map_buffer_bytes", c.map_buffer_bytes},
        {"spill_fraction", c.spill_fraction},
        {"merge_factor", c.merge_factor},
        {"mode", std::string(to_string(c.mode))},
        {"inputs", inputs},
        {"output", c.output.string()},
        {"seed", c.seed},
        {"samples_per_partition", c.samples_per_partition},
        {"max_group_size", c.max_group_size},
        {"indexes_only", c.indexes_only},
    };
}

PipelineConfig config_from(const json& j) {
    PipelineConfig c;
    c.mappers = j.value("mappers", c.mappers);
    c.reducers = j.value("reducers", c.reducers);
    c.shards = j.value("shards", c.shards);
    c.prefix_len = j.value("prefix_len", c.prefix_len);
    c.threshold = j.value("threshold", c.threshold);
    c.map_buffer_bytes = j.value("map_buffer_bytes", c.map_buffer_bytes);
    c.spill_fraction = j.value("spill_fraction", c.spill_fraction);
    c.merge_factor = j.value("merge_factor", c.merge_factor);
    c.mode = parse_mode(j.value("mode", std::string("indexed")));
    for (const auto& p : j.value("inputs", json::array()))
        c.inputs.emplace_back(p.get<std::string>());
    c.output = j.value("output", std::string());
    c.seed = j.value("seed", c.seed);
    c.samples_per_partition = j.value("samples_per_partition", c.samples_per_partition);
    c.max_group_size = j.value("max_group_size", c.max_group_size);
    c.indexes_only = j.value("indexes_only", c.indexes_only);
    return c;
}

} // namespace

std::string report_to_json(const RunReport& r, int indent) {
    json j;
    j["config"] = config_json(r.config);
    j["input_bytes"] = r.input_bytes;
    j["suffix_count"] = r.suffix_count;
    j["records_shuffled"] = r.records_shuffled;
    j["counters"] = counters_json(r.counters);
    if (r.input_bytes > 0)
        j["units_input_referenced"] = units_json(normalize(r.counters, UnitReference::input));
    if (r.counters.at(Phase::output, Metric::bytes_output) > 0)
        j["units_output_referenced"] = units_json(normalize(r.counters, UnitReference::output));
    j["partition_boundaries"] = r.partition_boundaries;

    json mappers = json::array();
    for (const auto& m : r.mappers)
        mappers.push_back({{"reads", m.reads},
                           {"records", m.records},
                           {"spills", m.spills},
                           {"intermediate_rounds", m.intermediate_rounds},
                           {"files_consumed", m.files_consumed},
                           {"final_merge", m.final_merge}});
    j["mappers"] = std::move(mappers);
    json reducers = json::array();
    for (const auto& s : r.reducers)
        reducers.push_back({{"runs", s.runs},
                            {"intermediate_rounds", s.intermediate_rounds},
                            {"files_consumed", s.files_consumed},
                            {"records", s.records},
                            {"groups", s.groups},
                            {"unsorted_groups", s.unsorted_groups},
                            {"batches", s.batches},
                            {"fetch_calls", s.fetch_calls}});
    j["reducers"] = std::move(reducers);

    j["store"] = {{"reads", r.store.reads},
                  {"text_bytes", r.store.text_bytes},
                  {"footprint_bytes", r.store.footprint_bytes}};
    if (r.store.footprint_bytes > 0 && r.store.text_bytes > 0)
        j["store"]["overhead_ratio"] =
            static_cast<double>(r.store.footprint_bytes) / static_cast<double>(r.store.text_bytes);
    j["times_ms"] = {{"ingest", r.times.ingest_ms},
                     {"sample", r.times.sample_ms},
                     {"map", r.times.map_ms},
                     {"reduce", r.times.reduce_ms},
                     {"total", r.times.total_ms}};
    json outputs = json::array();
    for (const auto& p : r.outputs)
        outputs.push_back(p.string());
    j["outputs"] = std::move(outputs);
    return j.dump(indent);
}

RunReport report_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        RunReport r;
        r.config = config_from(j.at("config"));
        r.counters = counters_from(j.at("counters"));
        r.input_bytes = j.value("input_bytes", std::uint64_t{0});
        r.suffix_count = j.value("suffix_count", std::uint64_t{0});
        r.records_shuffled = j.value("records_shuffled", std::uint64_t{0});
        for (const auto& p : j.value("outputs", json::array()))
            r.outputs.emplace_back(p.get<std::string>());
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run report: ") + e.what());
    }
}

RunReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read run report " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

void print_unit_table(std::ostream& out, const UnitTable& table) {
    out << std::left << std::setw(22) << "metric";
    for (auto name : kPhaseNames)
        out << std::right << std::setw(10) << name;
    out << '\n';
    const auto flags = out.flags();
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        bool any = false;
        for (std::size_t p = 0; p < kPhaseCount; ++p)
            any = any || table.units[p][m] != 0;
        if (!any)
            continue;
        out << std::left << std::setw(22) << kMetricNames[m];
        for (std::size_t p = 0; p < kPhaseCount; ++p) {
            out << std::right << std::setw(10);
            if (table.units[p][m] == 0)
                out << "";
            else
                out << std::fixed << std::setprecision(2) << table.units[p][m];
        }
        out << '\n';
    }
    out.flags(flags);
    out << "(1 unit = " << std::fixed << std::setprecision(0) << table.reference_bytes << " bytes)\n";
    out.flags(flags);
}

} // namespace sufforge
