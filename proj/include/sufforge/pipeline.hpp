#pragma once

#include "sufforge/counters.hpp"
#include "sufforge/encoding.hpp"
#include "sufforge/partitioner.hpp"
#include "sufforge/read.hpp"
#include "sufforge/read_store.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sufforge {

/// indexed shuffles (prefix code, packed index) pairs; materialized shuffles
/// the suffix text itself, the way a plain distributed sort would.
enum class Mode { indexed, materialized };

std::string_view to_string(Mode mode) noexcept;
/// Throws ConfigError.
Mode parse_mode(std::string_view text);

/// Wire size of one indexed key-value pair: 64-bit code + 64-bit index.
inline constexpr std::uint64_t kIndexedRecordBytes = 16;

struct PipelineConfig {
    std::size_t mappers = 4;
    std::size_t reducers = 4;
    std::size_t shards = 2;
    int prefix_len = kDefaultPrefixLen;
    std::uint64_t threshold = 1'600'000;       // accumulated suffixes before a fetch-and-sort
    std::uint64_t map_buffer_bytes = 8u << 20; // map-side sort buffer
    double spill_fraction = 0.8;
    std::size_t merge_factor = 10;
    Mode mode = Mode::indexed;
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path output;
    std::uint64_t seed = 0;
    std::size_t samples_per_partition = kDefaultSamplesPerPartition;
    std::uint64_t max_group_size = 16'000'000; // members in one sorting group
    bool indexes_only = false;
    bool keep_work = false;

    /// Throws ConfigError describing the first invalid field.
    void validate() const;
};

/// Parsed and validated input: every read '$'-terminated, seq unique.
struct InputSet {
    std::vector<Read> reads;
    std::uint64_t raw_bytes = 0; // read characters, terminator excluded
};

/// Parses "seq<TAB>read" lines from one or two files, appending '$' where
/// missing. Throws IngestError naming file and line on malformed lines,
/// duplicate seq, invalid symbols or reads longer than 999.
InputSet ingest_inputs(std::span<const std::filesystem::path> paths);

/// Groups reads by owning shard and sends one MPUT per shard. Adds the text
/// bytes sent to `put_bytes`. Throws IngestError on any rejected item.
void load_store(std::span<const Read> reads, StoreClient& client, std::uint64_t& put_bytes);

/// Sizes of the intermediate merge passes needed to bring `files` sorted
/// runs down to at most `factor`: the first pass takes ((files-1) mod
/// (factor-1)) + 1 runs, later passes take `factor`. Empty when files <=
/// factor.
std::vector<std::size_t> merge_pass_sizes(std::size_t files, std::size_t factor);

/// All suffix indexes sharing one prefix code.
struct SortingGroup {
    std::uint64_t code = 0;
    std::vector<SuffixIndex> members;
};

/// Collects consecutive equal-code records into sorting groups and releases
/// them in batches once at least `threshold` members have accumulated.
class GroupAccumulator {
public:
    GroupAccumulator(std::uint64_t threshold, std::uint64_t max_group_size);

    /// Records must arrive sorted by (code, index). Returns a ready batch when
    /// closing the previous group crossed the threshold.
    std::optional<std::vector<SortingGroup>> push(std::uint64_t code, SuffixIndex index);

    /// Closes the open group and returns whatever is pending.
    std::optional<std::vector<SortingGroup>> finish();

private:
    std::optional<std::vector<SortingGroup>> close_group();

    std::uint64_t threshold_;
    std::uint64_t max_group_size_;
    std::optional<SortingGroup> open_;
    std::vector<SortingGroup> pending_;
    std::uint64_t pending_members_ = 0;
};

struct MapperStats {
    std::uint64_t reads = 0;
    std::uint64_t records = 0;
    std::uint64_t spills = 0;
    std::uint64_t intermediate_rounds = 0;
    std::uint64_t files_consumed = 0;
    bool final_merge = false;
};

struct ReducerStats {
    std::uint64_t runs = 0;
    std::uint64_t intermediate_rounds = 0;
    std::uint64_t files_consumed = 0;
    std::uint64_t records = 0;
    std::uint64_t groups = 0;
    std::uint64_t unsorted_groups = 0; // complete-code groups emitted without a sort
    std::uint64_t batches = 0;
    std::uint64_t fetch_calls = 0;
};

struct StoreStats {
    std::uint64_t reads = 0;
    std::uint64_t text_bytes = 0;
    std::uint64_t footprint_bytes = 0; // only known for embedded shards
};

struct PhaseTimes {
    double ingest_ms = 0;
    double sample_ms = 0;
    double map_ms = 0;
    double reduce_ms = 0;
    double total_ms = 0;
};

struct RunReport {
    PipelineConfig config;
    FootprintCounters counters;
    std::uint64_t input_bytes = 0;
    std::uint64_t suffix_count = 0;
    std::uint64_t records_shuffled = 0;
    std::vector<std::uint64_t> partition_boundaries;
    std::vector<MapperStats> mappers;
    std::vector<ReducerStats> reducers;
    StoreStats store;
    PhaseTimes times;
    std::vector<std::filesystem::path> outputs;
};

/// Runs ingestion, sampling, map, shuffle and reduce against `store` and
/// writes part-00000 .. part-<R-1> under config.output. Errors carry the
/// failing phase in their message.
RunReport build_sa(const PipelineConfig& config, const StoreCluster& store);

/// Part-file paths of a finished run, in partition order.
std::vector<std::filesystem::path> part_files(const std::filesystem::path& dir);

} // namespace sufforge
