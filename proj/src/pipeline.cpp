#include "sufforge/pipeline.hpp"

#include "run_file.hpp"
#include "sufforge/error.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace sufforge {

namespace fs = std::filesystem;
using detail::IndexedRecord;
using detail::MaterializedRecord;
using detail::RunFile;
using detail::RunWriter;

std::string_view to_string(Mode mode) noexcept { return mode == Mode::indexed ? "indexed" : "materialized"; }

Mode parse_mode(std::string_view text) {
    if (text == "indexed")
        return Mode::indexed;
    if (text == "materialized")
        return Mode::materialized;
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected indexed or materialized)");
}

void PipelineConfig::validate() const {
    auto positive = [](std::uint64_t v, const char* name) {
        if (v == 0)
            throw ConfigError(std::string(name) + " must be positive");
    };
    positive(mappers, "mappers");
    positive(reducers, "reducers");
    positive(shards, "shards");
    positive(threshold, "threshold");
    positive(map_buffer_bytes, "map buffer size");
    positive(samples_per_partition, "samples per partition");
    positive(max_group_size, "max group size");
    if (prefix_len < 1 || prefix_len > kMaxPrefixLen)
        throw ConfigError("prefix length must be in [1, " + std::to_string(kMaxPrefixLen) + "]");
    if (!(spill_fraction > 0) || spill_fraction > 1)
        throw ConfigError("spill fraction must be in (0, 1]");
    if (merge_factor < 2)
        throw ConfigError("merge factor must be at least 2");
    if (inputs.empty() || inputs.size() > 2)
        throw ConfigError("expected one or two input files");
    if (output.empty())
        throw ConfigError("an output directory is required");
}

// ---------------------------------------------------------------------------
// Ingestion

InputSet ingest_inputs(std::span<const fs::path> paths) {
    InputSet input;
    std::unordered_map<std::uint64_t, std::string> first_seen;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IngestError("cannot open input " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string where = path.string() + ":" + std::to_string(lineno);
            const auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0)
                throw IngestError(where + ": malformed line (expected seq<TAB>read)");
            std::uint64_t seq = 0;
            auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, seq);
            if (ec != std::errc{} || ptr != line.data() + tab)
                throw IngestError(where + ": malformed sequence number");
            if (seq > kMaxSeq)
                throw IngestError(where + ": sequence number too large");
            Read read{seq, line.substr(tab + 1)};
            if (read.text.empty() || read.text.back() != '$')
                read.text.push_back('$');
            if (read.text.size() > kMaxReadLength)
                throw IngestError(where + ": read longer than " + std::to_string(kMaxReadLength - 1) +
                                  " symbols");
            if (auto problem = read_text_problem(read.text))
                throw IngestError(where + ": " + *problem);
            if (auto [it, fresh] = first_seen.try_emplace(seq, where); !fresh)
                throw IngestError(where + ": duplicate sequence number " + std::to_string(seq) +
                                  " (first seen at " + it->second + ")");
            input.raw_bytes += read.text.size() - 1;
            input.reads.push_back(std::move(read));
        }
    }
    return input;
}

void load_store(std::span<const Read> reads, StoreClient& client, std::uint64_t& put_bytes) {
    const std::size_t n = client.shard_count();
    std::vector<std::vector<Read>> batches(n);
    for (const auto& r : reads)
        batches[shard_of(r.seq, n)].push_back(r);
    for (std::size_t s = 0; s < n; ++s) {
        if (batches[s].empty())
            continue;
        const auto ack = client.mput_reads(s, batches[s]);
        if (!ack.rejected.empty()) {
            const auto& first = batches[s][ack.rejected.front().position];
            throw IngestError("shard " + std::to_string(s) + " rejected " + std::to_string(ack.rejected.size()) +
                              " reads (first: seq " + std::to_string(first.seq) + ")");
        }
        if (ack.stored != batches[s].size())
            throw IngestError("shard " + std::to_string(s) + " acknowledged " + std::to_string(ack.stored) +
                              " of " + std::to_string(batches[s].size()) + " reads");
        for (const auto& r : batches[s])
            put_bytes += r.text.size();
    }
}

// ---------------------------------------------------------------------------
// Merge scheduling and reducer grouping

std::vector<std::size_t> merge_pass_sizes(std::size_t files, std::size_t factor) {
    std::vector<std::size_t> passes;
    if (factor < 2)
        throw ConfigError("merge factor must be at least 2");
    std::size_t left = files;
    while (left > factor) {
        std::size_t take = factor;
        if (passes.empty()) {
            const std::size_t mod = (left - 1) % (factor - 1);
            take = mod == 0 ? factor : mod + 1;
        }
        passes.push_back(take);
        left = left - take + 1;
    }
    return passes;
}

GroupAccumulator::GroupAccumulator(std::uint64_t threshold, std::uint64_t max_group_size)
    : threshold_(threshold), max_group_size_(max_group_size) {}

std::optional<std::vector<SortingGroup>> GroupAccumulator::push(std::uint64_t code, SuffixIndex index) {
    std::optional<std::vector<SortingGroup>> ready;
    if (open_ && open_->code != code)
        ready = close_group();
    if (!open_)
        open_.emplace(SortingGroup{code, {}});
    if (open_->members.size() >= max_group_size_)
        throw PipelineError("sorting group for prefix code " + std::to_string(code) + " exceeds " +
                            std::to_string(max_group_size_) +
                            " suffixes; lengthen the prefix (--prefix-len) to split it");
    open_->members.push_back(index);
    return ready;
}

std::optional<std::vector<SortingGroup>> GroupAccumulator::close_group() {
    pending_members_ += open_->members.size();
    pending_.push_back(std::move(*open_));
    open_.reset();
    if (pending_members_ < threshold_)
        return std::nullopt;
    pending_members_ = 0;
    return std::exchange(pending_, {});
}

std::optional<std::vector<SortingGroup>> GroupAccumulator::finish() {
    if (open_)
        if (auto ready = close_group())
            return ready;
    if (pending_.empty())
        return std::nullopt;
    pending_members_ = 0;
    return std::exchange(pending_, {});
}

// ---------------------------------------------------------------------------
// Workers

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

/// Runs fn(i) on n threads and rethrows the first failure by worker order.
template <class Fn>
void run_workers(std::size_t n, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        threads.emplace_back([&, i] {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    for (auto& t : threads)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

/// Rethrows the active exception as the same type with a phase prefix.
[[noreturn]] void rethrow_tagged(const std::string& phase) {
    const std::string p = phase + " phase: ";
    try {
        throw;
    } catch (const IngestError& e) {
        throw IngestError(p + e.what());
    } catch (const TransportError& e) {
        throw TransportError(p + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(p + e.what());
    } catch (const PipelineError& e) {
        throw PipelineError(p + e.what());
    } catch (const Error& e) {
        throw Error(p + e.what());
    }
}

/// Splits reads into `parts` contiguous ranges of roughly equal suffix count.
std::vector<std::pair<std::size_t, std::size_t>> make_splits(const std::vector<Read>& reads, std::size_t parts) {
    std::uint64_t total = 0;
    for (const auto& r : reads)
        total += r.text.size();
    std::vector<std::pair<std::size_t, std::size_t>> splits;
    std::size_t begin = 0;
    std::uint64_t acc = 0;
    for (std::size_t p = 0; p < parts; ++p) {
        const std::uint64_t target = total * (p + 1) / parts;
        std::size_t end = begin;
        while (end < reads.size() && (acc < target || p + 1 == parts)) {
            acc += reads[end].text.size();
            ++end;
        }
        splits.emplace_back(begin, end);
        begin = end;
    }
    return splits;
}

struct MapResult {
    RunFile output;
    MapperStats stats;
    FootprintCounters counters;
};

struct Context {
    const PipelineConfig& config;
    const PartitionTable& table;
    const StoreCluster& store;
    fs::path work;
};

template <class R>
R make_record(const Read& read, std::size_t offset, std::uint64_t code);

template <>
IndexedRecord make_record<IndexedRecord>(const Read& read, std::size_t offset, std::uint64_t code) {
    return {code, read.seq * kOffsetRadix + offset};
}

template <>
MaterializedRecord make_record<MaterializedRecord>(const Read& read, std::size_t offset, std::uint64_t) {
    return {read.text.substr(offset), read.seq * kOffsetRadix + offset};
}

template <class R>
MapResult run_mapper(const Context& ctx, std::size_t id, std::span<const Read> split) {
    using Traits = detail::RecordTraits<R>;
    MapResult result;
    auto& counters = result.counters;
    auto& stats = result.stats;
    const std::size_t partitions = ctx.table.partitions();
    const int L = ctx.config.prefix_len;
    const std::uint64_t lead = pow5(L - 1);
    const auto spill_at = static_cast<std::uint64_t>(static_cast<double>(ctx.config.map_buffer_bytes) *
                                                     ctx.config.spill_fraction);
    const fs::path dir = ctx.work / ("map-" + std::to_string(id));
    fs::create_directories(dir);

    // The materialized baseline carries suffix text through the shuffle and
    // never touches the store.
    if constexpr (std::is_same_v<R, IndexedRecord>) {
        auto client = ctx.store.connect();
        load_store(split, client, counters.at(Phase::store, Metric::bytes_put_store));
    }

    std::vector<std::pair<std::uint32_t, R>> buffer;
    std::uint64_t buffered = 0;
    std::deque<RunFile> spills;
    std::size_t file_seq = 0;
    auto next_path = [&] { return dir / ("run-" + std::to_string(file_seq++)); };

    auto spill = [&] {
        std::sort(buffer.begin(), buffer.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first)
                return a.first < b.first;
            return a.second < b.second;
        });
        RunWriter writer(next_path(), partitions);
        for (const auto& [p, rec] : buffer)
            writer.write(p, rec);
        spills.push_back(std::move(writer).finish());
        counters.add(Phase::map, Metric::bytes_written_local, buffered);
        ++stats.spills;
        buffer.clear();
        buffered = 0;
    };

    for (const auto& read : split) {
        ++stats.reads;
        counters.add(Phase::map, Metric::bytes_read_input, read.text.size() - 1);
        const std::string_view text = read.text;
        std::uint64_t code = encode_prefix_unchecked(text, L);
        for (std::size_t off = 0; off < text.size(); ++off) {
            if (off > 0) {
                const std::size_t incoming = off + static_cast<std::size_t>(L) - 1;
                const int d = incoming < text.size() ? symbol_digit(text[incoming]) : 0;
                code = (code % lead) * 5 + static_cast<std::uint64_t>(d);
            }
            R rec = make_record<R>(read, off, code);
            buffered += Traits::logical_bytes(rec);
            buffer.emplace_back(static_cast<std::uint32_t>(ctx.table.partition_of(code)), std::move(rec));
            ++stats.records;
            if (buffered >= spill_at)
                spill();
        }
    }
    if (!buffer.empty() || spills.empty())
        spill();
    if (stats.records == 0)
        stats.spills = 0;

    if (spills.size() == 1) {
        result.output = std::move(spills.front());
        return result;
    }
    auto merge_front = [&](std::size_t n) {
        std::vector<RunFile> inputs(std::make_move_iterator(spills.begin()),
                                    std::make_move_iterator(spills.begin() + static_cast<std::ptrdiff_t>(n)));
        spills.erase(spills.begin(), spills.begin() + static_cast<std::ptrdiff_t>(n));
        std::uint64_t in_bytes = 0;
        for (const auto& f : inputs)
            in_bytes += f.logical_bytes();
        auto merged = detail::merge_runs<R>(inputs, next_path(), partitions);
        counters.add(Phase::map, Metric::bytes_read_local, in_bytes);
        counters.add(Phase::map, Metric::bytes_written_local, merged.logical_bytes());
        for (const auto& f : inputs)
            fs::remove(f.path);
        return merged;
    };
    for (std::size_t n : merge_pass_sizes(spills.size(), ctx.config.merge_factor)) {
        spills.push_back(merge_front(n));
        ++stats.intermediate_rounds;
        stats.files_consumed += n;
    }
    result.output = merge_front(spills.size());
    stats.final_merge = true;
    return result;
}

struct ReduceResult {
    ReducerStats stats;
    FootprintCounters counters;
    fs::path output;
};

class PartWriter {
public:
    PartWriter(const fs::path& path, bool indexes_only) : buf_(detail::kIoBufferSize), indexes_only_(indexes_only) {
        out_.rdbuf()->pubsetbuf(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw PipelineError("cannot create output " + path.string());
        path_ = path;
    }

    void line(std::string_view suffix, std::uint64_t index) {
        char digits[24];
        auto [end, ec] = std::to_chars(digits, digits + sizeof(digits), index);
        if (!indexes_only_) {
            out_.write(suffix.data(), static_cast<std::streamsize>(suffix.size()));
            out_.put('\t');
            bytes_ += suffix.size() + 1;
        }
        out_.write(digits, end - digits);
        out_.put('\n');
        bytes_ += static_cast<std::uint64_t>(end - digits) + 1;
    }

    std::uint64_t close() {
        out_.close();
        if (!out_)
            throw PipelineError("write to " + path_.string() + " failed");
        return bytes_;
    }

private:
    std::vector<char> buf_;
    std::ofstream out_;
    fs::path path_;
    bool indexes_only_;
    std::uint64_t bytes_ = 0;
};

/// Fetches the texts of one accumulated batch and writes it in order.
void emit_batch(std::vector<SortingGroup>& groups, StoreClient& client, PartWriter& out, ReducerStats& stats,
                FootprintCounters& counters, [[maybe_unused]] int prefix_len) {
    std::vector<SuffixIndex> indexes;
    for (const auto& g : groups)
        indexes.insert(indexes.end(), g.members.begin(), g.members.end());
    auto items = client.mget_suffix(indexes);
    ++stats.batches;
    std::vector<bool> touched(client.shard_count());
    for (auto idx : indexes)
        touched[shard_of(unpack_index(idx).seq, client.shard_count())] = true;
    stats.fetch_calls += static_cast<std::uint64_t>(std::count(touched.begin(), touched.end(), true));

    std::string bad;
    std::size_t bad_count = 0;
    std::uint64_t got = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].status == wire::ItemStatus::ok) {
            got += items[i].text.size();
            continue;
        }
        if (bad_count++ < 20)
            bad += (bad.empty() ? "" : ", ") + std::to_string(indexes[i].packed) +
                   (items[i].status == wire::ItemStatus::not_found ? " (not found)" : " (offset out of range)");
    }
    if (bad_count > 0)
        throw PipelineError("store failed " + std::to_string(bad_count) + " suffix fetches: " + bad);
    counters.add(Phase::store, Metric::bytes_got_store, got);

    std::size_t base = 0;
    std::vector<std::size_t> order;
    for (const auto& g : groups) {
        const std::size_t n = g.members.size();
        order.resize(n);
        std::iota(order.begin(), order.end(), base);
#ifdef SUFFORGE_DEBUG_CHECKS
        for (std::size_t i : order)
            if (encode_prefix_unchecked(items[i].text, prefix_len) != g.code)
                throw PipelineError("store returned suffix inconsistent with prefix code for index " +
                                    std::to_string(indexes[i].packed));
#endif
        ++stats.groups;
        if (code_is_complete(g.code)) {
            // Every member is the same text; input order is already by index.
            ++stats.unsorted_groups;
        } else if (n > 1) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (int c = items[a].text.compare(items[b].text); c != 0)
                    return c < 0;
                return indexes[a] < indexes[b];
            });
        }
        for (std::size_t i : order)
            out.line(items[i].text, indexes[i].packed);
        base += n;
    }
}

template <class R>
ReduceResult run_reducer(const Context& ctx, std::size_t id, const std::vector<MapResult>& maps) {
    ReduceResult result;
    auto& counters = result.counters;
    auto& stats = result.stats;
    const fs::path dir = ctx.work / ("reduce-" + std::to_string(id));
    fs::create_directories(dir);
    std::size_t file_seq = 0;
    auto next_path = [&] { return dir / ("run-" + std::to_string(file_seq++)); };

    std::deque<RunFile> runs;
    for (const auto& m : maps) {
        const auto& seg = m.output.segments[id];
        if (seg.records == 0)
            continue;
        runs.push_back(detail::copy_segment(m.output, id, next_path()));
        counters.add(Phase::shuffle, Metric::bytes_shuffled, seg.logical);
        counters.add(Phase::reduce, Metric::bytes_written_local, seg.logical);
    }
    stats.runs = runs.size();

    for (std::size_t n : merge_pass_sizes(runs.size(), ctx.config.merge_factor)) {
        std::vector<RunFile> inputs(std::make_move_iterator(runs.begin()),
                                    std::make_move_iterator(runs.begin() + static_cast<std::ptrdiff_t>(n)));
        runs.erase(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(n));
        auto merged = detail::merge_runs<R>(inputs, next_path(), 1);
        const auto bytes = merged.logical_bytes();
        counters.add(Phase::reduce, Metric::bytes_read_local, bytes);
        counters.add(Phase::reduce, Metric::bytes_written_local, bytes);
        for (const auto& f : inputs)
            fs::remove(f.path);
        runs.push_back(std::move(merged));
        ++stats.intermediate_rounds;
        stats.files_consumed += n;
    }

    char name[32];
    std::snprintf(name, sizeof(name), "part-%05zu", id);
    result.output = ctx.config.output / name;
    PartWriter out(result.output, ctx.config.indexes_only);
    const std::vector<RunFile> finals(runs.begin(), runs.end());

    if constexpr (std::is_same_v<R, IndexedRecord>) {
        auto client = ctx.store.connect();
        GroupAccumulator acc(ctx.config.threshold, ctx.config.max_group_size);
        const auto read = detail::merge_partition<R>(finals, 0, [&](const IndexedRecord& rec) {
            ++stats.records;
            if (auto batch = acc.push(rec.code, SuffixIndex{rec.index}))
                emit_batch(*batch, client, out, stats, counters, ctx.config.prefix_len);
        });
        if (auto batch = acc.finish())
            emit_batch(*batch, client, out, stats, counters, ctx.config.prefix_len);
        counters.add(Phase::reduce, Metric::bytes_read_local, read);
    } else {
        const auto read = detail::merge_partition<R>(finals, 0, [&](const MaterializedRecord& rec) {
            ++stats.records;
            out.line(rec.text, rec.index);
        });
        counters.add(Phase::reduce, Metric::bytes_read_local, read);
    }
    counters.add(Phase::output, Metric::bytes_output, out.close());
    return result;
}

template <class R>
void run_phases(const Context& ctx, const InputSet& input, RunReport& report) {
    const auto& config = ctx.config;
    const auto splits = make_splits(input.reads, config.mappers);
    std::vector<MapResult> maps(config.mappers);

    auto t = std::chrono::steady_clock::now();
    try {
        run_workers(config.mappers, [&](std::size_t i) {
            const auto [b, e] = splits[i];
            maps[i] = run_mapper<R>(ctx, i, std::span(input.reads).subspan(b, e - b));
        });
    } catch (...) {
        rethrow_tagged("map");
    }
    report.times.map_ms = ms_since(t);

    std::vector<ReduceResult> reduces(config.reducers);
    t = std::chrono::steady_clock::now();
    try {
        run_workers(config.reducers, [&](std::size_t i) { reduces[i] = run_reducer<R>(ctx, i, maps); });
    } catch (...) {
        rethrow_tagged("reduce");
    }
    report.times.reduce_ms = ms_since(t);

    for (auto& m : maps) {
        report.counters += m.counters;
        report.mappers.push_back(m.stats);
        report.suffix_count += m.stats.records;
    }
    for (auto& r : reduces) {
        report.counters += r.counters;
        report.reducers.push_back(r.stats);
        report.records_shuffled += r.stats.records;
        report.outputs.push_back(r.output);
    }
}

} // namespace

std::vector<fs::path> part_files(const fs::path& dir) {
    std::vector<fs::path> parts;
    if (!fs::is_directory(dir))
        return parts;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("part-"))
            parts.push_back(entry.path());
    }
    std::sort(parts.begin(), parts.end());
    return parts;
}

RunReport build_sa(const PipelineConfig& config, const StoreCluster& store) {
    config.validate();
    if (store.shard_count() != config.shards)
        throw ConfigError("store has " + std::to_string(store.shard_count()) + " shards but config expects " +
                          std::to_string(config.shards));
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = config;

    fs::create_directories(config.output);
    for (const auto& old : part_files(config.output))
        fs::remove(old);
    const fs::path work = config.output / "_work";
    fs::remove_all(work);
    fs::create_directories(work);

    InputSet input;
    auto t = std::chrono::steady_clock::now();
    try {
        input = ingest_inputs(config.inputs);
        if (input.reads.empty())
            throw IngestError("input contains no reads");
    } catch (...) {
        rethrow_tagged("ingest");
    }
    report.times.ingest_ms = ms_since(t);
    report.input_bytes = input.raw_bytes;

    t = std::chrono::steady_clock::now();
    PartitionTable table;
    try {
        table = build_partition_table(sample_suffix_codes(input.reads, config.reducers, config.samples_per_partition,
                                                          config.prefix_len, config.seed),
                                      config.reducers);
    } catch (...) {
        rethrow_tagged("sample");
    }
    report.partition_boundaries = table.boundaries();
    report.times.sample_ms = ms_since(t);

    const Context ctx{config, table, store, work};
    if (config.mode == Mode::indexed)
        run_phases<IndexedRecord>(ctx, input, report);
    else
        run_phases<MaterializedRecord>(ctx, input, report);

    report.store.reads = input.reads.size();
    for (const auto& r : input.reads)
        report.store.text_bytes += r.text.size();
    if (const auto* embedded = dynamic_cast<const EmbeddedCluster*>(&store)) {
        for (std::size_t i = 0; i < embedded->shard_count(); ++i)
            report.store.footprint_bytes += embedded->shard(i).footprint_bytes();
    }
    if (!config.keep_work)
        fs::remove_all(work);
    report.times.total_ms = ms_since(start);
    return report;
}

} // namespace sufforge
