#pragma once

// Sorted run files used for map spills, map outputs and reduce-side runs.
// A run file holds one contiguous segment per partition; the segment table
// lives in memory next to the path.

#include "sufforge/error.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <queue>
#include <string>
#include <vector>

namespace sufforge::detail {

struct IndexedRecord {
    std::uint64_t code = 0;
    std::uint64_t index = 0;

    friend auto operator<=>(const IndexedRecord&, const IndexedRecord&) = default;
};

struct MaterializedRecord {
    std::string text;
    std::uint64_t index = 0;

    friend bool operator<(const MaterializedRecord& a, const MaterializedRecord& b) noexcept {
        if (int c = a.text.compare(b.text); c != 0)
            return c < 0;
        return a.index < b.index;
    }
};

template <class R>
struct RecordTraits;

template <>
struct RecordTraits<IndexedRecord> {
    static std::uint64_t logical_bytes(const IndexedRecord&) noexcept { return 16; }

    static void write(std::ostream& out, const IndexedRecord& r) {
        char buf[16];
        std::memcpy(buf, &r.code, 8);
        std::memcpy(buf + 8, &r.index, 8);
        out.write(buf, sizeof(buf));
    }

    static bool read(std::istream& in, IndexedRecord& r) {
        char buf[16];
        if (!in.read(buf, sizeof(buf)))
            return false;
        std::memcpy(&r.code, buf, 8);
        std::memcpy(&r.index, buf + 8, 8);
        return true;
    }
};

// Only the suffix text is counted; the index travels as framing.
template <>
struct RecordTraits<MaterializedRecord> {
    static std::uint64_t logical_bytes(const MaterializedRecord& r) noexcept { return r.text.size(); }

    static void write(std::ostream& out, const MaterializedRecord& r) {
        const auto len = static_cast<std::uint16_t>(r.text.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(r.text.data(), static_cast<std::streamsize>(r.text.size()));
        out.write(reinterpret_cast<const char*>(&r.index), sizeof(r.index));
    }

    static bool read(std::istream& in, MaterializedRecord& r) {
        std::uint16_t len = 0;
        if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)))
            return false;
        r.text.resize(len);
        return static_cast<bool>(in.read(r.text.data(), len)) &&
               static_cast<bool>(in.read(reinterpret_cast<char*>(&r.index), sizeof(r.index)));
    }
};

struct Segment {
    std::uint64_t offset = 0;   // physical byte offset
    std::uint64_t length = 0;   // physical bytes
    std::uint64_t records = 0;
    std::uint64_t logical = 0;  // counted bytes
};

struct RunFile {
    std::filesystem::path path;
    std::vector<Segment> segments;

    std::uint64_t logical_bytes() const {
        std::uint64_t n = 0;
        for (const auto& s : segments)
            n += s.logical;
        return n;
    }
};

inline constexpr std::size_t kIoBufferSize = 1 << 16;

class RunWriter {
public:
    RunWriter(std::filesystem::path path, std::size_t partitions) : buf_(kIoBufferSize) {
        run_.path = std::move(path);
        run_.segments.resize(partitions);
        out_.rdbuf()->pubsetbuf(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        out_.open(run_.path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw PipelineError("cannot create run file " + run_.path.string());
    }

    template <class R>
    void write(std::size_t partition, const R& rec) {
        auto& seg = run_.segments[partition];
        if (seg.records == 0)
            seg.offset = static_cast<std::uint64_t>(out_.tellp());
        RecordTraits<R>::write(out_, rec);
        ++seg.records;
        seg.logical += RecordTraits<R>::logical_bytes(rec);
    }

    RunFile finish() && {
        const auto end = static_cast<std::uint64_t>(out_.tellp());
        // Segments are written in partition order; lengths follow from the
        // next non-empty segment's offset.
        std::uint64_t next = end;
        for (auto it = run_.segments.rbegin(); it != run_.segments.rend(); ++it) {
            if (it->records == 0)
                continue;
            it->length = next - it->offset;
            next = it->offset;
        }
        out_.close();
        if (!out_)
            throw PipelineError("write to run file " + run_.path.string() + " failed");
        return std::move(run_);
    }

private:
    std::vector<char> buf_;
    std::ofstream out_;
    RunFile run_;
};

template <class R>
class SegmentReader {
public:
    SegmentReader(const std::filesystem::path& path, const Segment& seg)
        : buf_(kIoBufferSize), remaining_(seg.records) {
        in_.rdbuf()->pubsetbuf(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        in_.open(path, std::ios::binary);
        if (!in_)
            throw PipelineError("cannot open run file " + path.string());
        in_.seekg(static_cast<std::streamoff>(seg.offset));
    }

    bool next(R& rec) {
        if (remaining_ == 0)
            return false;
        if (!RecordTraits<R>::read(in_, rec))
            throw PipelineError("run file truncated");
        --remaining_;
        return true;
    }

private:
    std::vector<char> buf_;
    std::ifstream in_;
    std::uint64_t remaining_;
};

/// K-way merge of one partition across several run files, in ascending
/// record order. `sink(rec)` receives every record once.
template <class R, class Sink>
std::uint64_t merge_partition(const std::vector<RunFile>& inputs, std::size_t partition, Sink&& sink) {
    std::vector<std::unique_ptr<SegmentReader<R>>> readers;
    std::vector<R> heads;
    for (const auto& run : inputs) {
        const auto& seg = run.segments[partition];
        if (seg.records == 0)
            continue;
        readers.push_back(std::make_unique<SegmentReader<R>>(run.path, seg));
        heads.emplace_back();
        readers.back()->next(heads.back());
    }
    auto greater = [&heads](std::size_t a, std::size_t b) { return heads[b] < heads[a]; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
    for (std::size_t i = 0; i < readers.size(); ++i)
        heap.push(i);
    std::uint64_t bytes = 0;
    while (!heap.empty()) {
        const std::size_t i = heap.top();
        heap.pop();
        bytes += RecordTraits<R>::logical_bytes(heads[i]);
        sink(heads[i]);
        if (readers[i]->next(heads[i]))
            heap.push(i);
    }
    return bytes;
}

/// Merges every partition of `inputs` into one new run file.
template <class R>
RunFile merge_runs(const std::vector<RunFile>& inputs, std::filesystem::path out_path, std::size_t partitions) {
    RunWriter writer(std::move(out_path), partitions);
    for (std::size_t p = 0; p < partitions; ++p)
        merge_partition<R>(inputs, p, [&](const R& rec) { writer.write(p, rec); });
    return std::move(writer).finish();
}

/// Copies one segment of `src` into a new single-partition run file.
inline RunFile copy_segment(const RunFile& src, std::size_t partition, std::filesystem::path out_path) {
    const auto& seg = src.segments[partition];
    std::ifstream in(src.path, std::ios::binary);
    if (!in)
        throw PipelineError("cannot open map output " + src.path.string());
    in.seekg(static_cast<std::streamoff>(seg.offset));
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw PipelineError("cannot create reduce run " + out_path.string());
    std::vector<char> buf(kIoBufferSize);
    std::uint64_t left = seg.length;
    while (left > 0) {
        const auto n = static_cast<std::streamsize>(std::min<std::uint64_t>(left, buf.size()));
        if (!in.read(buf.data(), n))
            throw PipelineError("map output " + src.path.string() + " truncated");
        out.write(buf.data(), n);
        left -= static_cast<std::uint64_t>(n);
    }
    if (!out)
        throw PipelineError("write to " + out_path.string() + " failed");
    RunFile run;
    run.path = std::move(out_path);
    run.segments.push_back({0, seg.length, seg.records, seg.logical});
    return run;
}

} // namespace sufforge::detail
