#include "sufforge/error.hpp"
#include "sufforge/footprint_model.hpp"
#include "sufforge/oracle.hpp"
#include "sufforge/pipeline.hpp"
#include "sufforge/verify.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

using namespace sufforge;
using sufforge::testing::TempDir;

namespace {

PipelineConfig small_config(const TempDir& dir, std::vector<std::filesystem::path> inputs) {
    PipelineConfig c;
    c.inputs = std::move(inputs);
    c.output = dir / "out";
    c.samples_per_partition = 200;
    c.map_buffer_bytes = 4096;
    c.merge_factor = 3;
    c.threshold = 100;
    return c;
}

std::filesystem::path write_reads(const TempDir& dir, const std::string& name, const std::vector<Read>& reads) {
    const auto path = dir / name;
    write_reads_tsv(path, reads);
    return path;
}

} // namespace

TEST_CASE("ingest appends the terminator and accepts paired files") {
    TempDir dir("ingest");
    sufforge::testing::write_file(dir / "a.tsv", "0\tACGT\n1\tGG$\n");
    sufforge::testing::write_file(dir / "b.tsv", "7\tTT\n");
    const std::vector<std::filesystem::path> paths{dir / "a.tsv", dir / "b.tsv"};
    const auto in = ingest_inputs(paths);
    REQUIRE(in.reads.size() == 3);
    CHECK(in.reads[0].text == "ACGT$");
    CHECK(in.reads[1].text == "GG$");
    CHECK(in.reads[2] == Read{7, "TT$"});
    CHECK(in.raw_bytes == 8);
}

TEST_CASE("ingest rejects bad input with file and line") {
    TempDir dir("ingest-bad");
    auto expect_error = [&](const std::string& body, const std::string& fragment) {
        sufforge::testing::write_file(dir / "in.tsv", body);
        const std::vector<std::filesystem::path> paths{dir / "in.tsv"};
        try {
            ingest_inputs(paths);
            FAIL("no error for: " << body);
        } catch (const IngestError& e) {
            const std::string what = e.what();
            CHECK_MESSAGE(what.find(fragment) != std::string::npos, what);
            CHECK_MESSAGE(what.find("in.tsv:") != std::string::npos, what);
        }
    };
    expect_error("0\tAC\n0\tGT\n", "duplicate");
    expect_error("0\t" + std::string(1000, 'A') + "\n", "longer");
    expect_error("0\tACNT\n", "in.tsv:1");
    expect_error("0\tAC$G\n", "in.tsv:1");
    expect_error("0\tAC\nACGT\n", "in.tsv:2");
    expect_error("x\tAC\n", "sequence number");
    // 999 symbols plus terminator is the longest legal read.
    sufforge::testing::write_file(dir / "ok.tsv", "0\t" + std::string(999, 'C') + "\n");
    const std::vector<std::filesystem::path> ok{dir / "ok.tsv"};
    CHECK(ingest_inputs(ok).reads[0].text.size() == 1000);

    const std::vector<std::filesystem::path> missing{dir / "nope.tsv"};
    CHECK_THROWS_AS(ingest_inputs(missing), IngestError);
}

TEST_CASE("config validation") {
    PipelineConfig c;
    c.inputs = {"x"};
    c.output = "y";
    CHECK_NOTHROW(c.validate());
    auto bad = [&](auto mutate) {
        PipelineConfig d = c;
        mutate(d);
        CHECK_THROWS_AS(d.validate(), ConfigError);
    };
    bad([](auto& d) { d.mappers = 0; });
    bad([](auto& d) { d.reducers = 0; });
    bad([](auto& d) { d.shards = 0; });
    bad([](auto& d) { d.prefix_len = 0; });
    bad([](auto& d) { d.prefix_len = 28; });
    bad([](auto& d) { d.threshold = 0; });
    bad([](auto& d) { d.spill_fraction = 1.5; });
    bad([](auto& d) { d.merge_factor = 1; });
    bad([](auto& d) { d.inputs.clear(); });
    bad([](auto& d) { d.inputs = {"a", "b", "c"}; });
    CHECK(parse_mode("indexed") == Mode::indexed);
    CHECK(parse_mode("materialized") == Mode::materialized);
    CHECK_THROWS_AS(parse_mode("fast"), ConfigError);
}

TEST_CASE("merge pass sizes follow the pass-factor rule") {
    CHECK(merge_pass_sizes(35, 10) == std::vector<std::size_t>{8, 10, 10});
    CHECK(merge_pass_sizes(10, 10).empty());
    CHECK(merge_pass_sizes(1, 10).empty());
    CHECK(merge_pass_sizes(11, 10) == std::vector<std::size_t>{2});
    CHECK(merge_pass_sizes(5, 2) == std::vector<std::size_t>{2, 2, 2});
    // Every pass leaves exactly `factor` runs for the final merge.
    for (std::size_t f = 2; f <= 12; ++f)
        for (std::size_t s = f + 1; s <= 200; ++s) {
            std::size_t left = s;
            const auto passes = merge_pass_sizes(s, f);
            for (std::size_t i = 0; i < passes.size(); ++i) {
                REQUIRE(passes[i] >= 2);
                REQUIRE(passes[i] <= f);
                if (i > 0)
                    REQUIRE(passes[i] == f);
                left = left - passes[i] + 1;
            }
            REQUIRE(left == f);
        }
}

TEST_CASE("group accumulator releases at the threshold") {
    GroupAccumulator acc(5, 100);
    CHECK_FALSE(acc.push(1, SuffixIndex{10}));
    CHECK_FALSE(acc.push(1, SuffixIndex{11}));
    CHECK_FALSE(acc.push(1, SuffixIndex{12}));
    CHECK_FALSE(acc.push(2, SuffixIndex{20}));
    CHECK_FALSE(acc.push(2, SuffixIndex{21}));
    CHECK_FALSE(acc.push(2, SuffixIndex{22}));
    // Closing group 2 brings the pending total to 6.
    const auto batch = acc.push(3, SuffixIndex{30});
    REQUIRE(batch);
    REQUIRE(batch->size() == 2);
    CHECK((*batch)[0].members.size() == 3);
    CHECK((*batch)[1].code == 2);
    const auto rest = acc.finish();
    REQUIRE(rest);
    CHECK(rest->size() == 1);
    CHECK((*rest)[0].members == std::vector<SuffixIndex>{SuffixIndex{30}});
    CHECK_FALSE(acc.finish());

    // The last group alone crossing the threshold still comes back from finish.
    GroupAccumulator last(2, 100);
    CHECK_FALSE(last.push(4, SuffixIndex{1}));
    CHECK_FALSE(last.push(4, SuffixIndex{2}));
    const auto tail = last.finish();
    REQUIRE(tail);
    CHECK(tail->at(0).members.size() == 2);

    GroupAccumulator small(10, 3);
    for (std::uint64_t i = 0; i < 3; ++i)
        CHECK_FALSE(small.push(7, SuffixIndex{i}));
    CHECK_THROWS_AS(small.push(7, SuffixIndex{3}), PipelineError);
}

TEST_CASE("one read maps to one record per suffix") {
    TempDir dir("ag");
    sufforge::testing::write_file(dir / "in.tsv", "0\tAG\n");
    auto c = small_config(dir, {dir / "in.tsv"});
    c.mappers = c.reducers = c.shards = 1;
    EmbeddedCluster store(1, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);
    CHECK(report.mappers.at(0).records == 3);
    CHECK(report.suffix_count == 3);
    CHECK(sufforge::testing::read_parts(c.output) == "$\t2\nAG$\t0\nG$\t1\n");
    CHECK(report.counters.at(Phase::map, Metric::bytes_read_input) == 2);
    CHECK(report.counters.at(Phase::store, Metric::bytes_put_store) == 3);
    CHECK_FALSE(std::filesystem::exists(c.output / "_work"));
}

TEST_CASE("map side spills at the buffer fraction") {
    TempDir dir("spill");
    // 128 suffixes of 16 bytes against a 1280-byte spill point: 2 spills, 1 merge.
    sufforge::testing::write_file(dir / "in.tsv", "0\t" + std::string(127, 'A') + "\n");
    auto c = small_config(dir, {dir / "in.tsv"});
    c.mappers = c.reducers = c.shards = 1;
    c.map_buffer_bytes = 1600;
    c.spill_fraction = 0.8;
    c.merge_factor = 10;
    EmbeddedCluster store(1, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);
    const auto& m = report.mappers.at(0);
    CHECK(m.records == 128);
    CHECK(m.spills == 2);
    CHECK(m.intermediate_rounds == 0);
    CHECK(m.final_merge);
    CHECK(report.counters.at(Phase::map, Metric::bytes_written_local) == 2 * 128 * 16);
    CHECK(report.counters.at(Phase::map, Metric::bytes_read_local) == 128 * 16);
}

TEST_CASE("reduce side merges many mapper segments in rounds") {
    TempDir dir("rounds");
    const auto reads = gen_reads({70, 30, 11});
    auto c = small_config(dir, {write_reads(dir, "in.tsv", reads)});
    c.mappers = 35;
    c.reducers = 1;
    c.shards = 1;
    c.merge_factor = 10;
    EmbeddedCluster store(1, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);
    const auto& r = report.reducers.at(0);
    CHECK(r.runs == 35);
    CHECK(r.intermediate_rounds == 3);
    CHECK(r.files_consumed == 28);
    CHECK(sufforge::testing::read_parts(c.output) == sufforge::testing::oracle_text(reads));
}

TEST_CASE("complete-code groups skip the sort") {
    TempDir dir("complete");
    // With L = 4 every suffix shorter than 4 symbols has a complete code.
    sufforge::testing::write_file(dir / "in.tsv", "0\tAC\n1\tAC\n2\tACGTACGT\n");
    auto c = small_config(dir, {dir / "in.tsv"});
    c.mappers = c.reducers = c.shards = 1;
    c.prefix_len = 4;
    EmbeddedCluster store(1, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);
    CHECK(report.reducers.at(0).unsorted_groups > 0);
    const std::vector<Read> reads{{0, "AC$"}, {1, "AC$"}, {2, "ACGTACGT$"}};
    CHECK(sufforge::testing::read_parts(c.output) == sufforge::testing::oracle_text(reads));
}

TEST_CASE("equal suffixes from different reads order by index") {
    TempDir dir("ties");
    sufforge::testing::write_file(dir / "in.tsv", "5\tGATTACA\n2\tGATTACA\n9\tGATTACA\n");
    auto c = small_config(dir, {dir / "in.tsv"});
    c.mappers = 2;
    c.reducers = 3;
    c.shards = 2;
    c.prefix_len = 2;
    c.threshold = 1;
    EmbeddedCluster store(2, EmbeddedTransport::in_process);
    build_sa(c, store);
    const auto text = sufforge::testing::read_parts(c.output);
    CHECK(text.find("GATTACA$\t2000\nGATTACA$\t5000\nGATTACA$\t9000\n") != std::string::npos);
}

TEST_CASE("pipeline matches the oracle and conserves records") {
    TempDir dir("oracle");
    const auto reads = gen_reads({1000, 40, 5});
    const auto input = write_reads(dir, "in.tsv", reads);
    auto c = small_config(dir, {input});
    c.map_buffer_bytes = 16384;
    EmbeddedCluster store(2, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);

    const std::uint64_t n = 1000 * 41;
    CHECK(report.suffix_count == n);
    CHECK(report.records_shuffled == n);
    CHECK(report.counters.at(Phase::shuffle, Metric::bytes_shuffled) == kIndexedRecordBytes * n);
    CHECK(report.input_bytes == 1000 * 40);
    CHECK(report.store.reads == 1000);
    CHECK(report.outputs.size() == 4);
    std::uint64_t groups = 0;
    for (const auto& r : report.reducers)
        groups += r.groups;
    CHECK(groups > 0);

    const auto text = sufforge::testing::read_parts(c.output);
    CHECK(text == sufforge::testing::oracle_text(reads));
    CHECK(report.counters.at(Phase::output, Metric::bytes_output) == text.size());

    // Part files hold disjoint, increasing ranges.
    const std::vector<std::filesystem::path> inputs{input};
    const auto v = verify_against_oracle(inputs, c.output);
    CHECK(v.lines == n);
    CHECK(v.part_files == 4);
}

TEST_CASE("indexes-only output and tcp transport") {
    TempDir dir("idx");
    const auto reads = gen_reads({150, 25, 8});
    const auto input = write_reads(dir, "in.tsv", reads);
    auto c = small_config(dir, {input});
    c.indexes_only = true;
    EmbeddedCluster store(2, EmbeddedTransport::tcp);
    build_sa(c, store);
    CHECK(sufforge::testing::read_parts(c.output) == sufforge::testing::oracle_text(reads, true));
    const std::vector<std::filesystem::path> inputs{input};
    CHECK_NOTHROW(verify_against_oracle(inputs, c.output, true));
    CHECK_THROWS_AS(verify_against_oracle(inputs, c.output, false), VerifyMismatch);
}

TEST_CASE("paired inputs") {
    TempDir dir("paired");
    const auto reads = gen_reads({100, 20, 3});
    const auto mates = paired_mates(reads);
    auto c = small_config(dir, {write_reads(dir, "r1.tsv", reads), write_reads(dir, "r2.tsv", mates)});
    EmbeddedCluster store(2, EmbeddedTransport::in_process);
    build_sa(c, store);
    auto all = reads;
    all.insert(all.end(), mates.begin(), mates.end());
    CHECK(sufforge::testing::read_parts(c.output) == sufforge::testing::oracle_text(all));
}

TEST_CASE("builds are deterministic") {
    TempDir dir("det");
    const auto input = write_reads(dir, "in.tsv", gen_reads({400, 30, 21}));
    auto c = small_config(dir, {input});
    c.mappers = c.reducers = 8;
    c.seed = 99;
    RunReport first, second;
    {
        EmbeddedCluster store(2, EmbeddedTransport::in_process);
        first = build_sa(c, store);
    }
    const auto text = sufforge::testing::read_parts(c.output);
    {
        EmbeddedCluster store(2, EmbeddedTransport::in_process);
        second = build_sa(c, store);
    }
    CHECK(sufforge::testing::read_parts(c.output) == text);
    CHECK(first.counters == second.counters);
    CHECK(first.partition_boundaries == second.partition_boundaries);
}

TEST_CASE("materialized mode agrees with indexed mode") {
    TempDir dir("mat");
    const auto reads = gen_reads({300, 30, 17});
    auto c = small_config(dir, {write_reads(dir, "in.tsv", reads)});
    c.mode = Mode::materialized;
    EmbeddedCluster store(2, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);
    CHECK(sufforge::testing::read_parts(c.output) == sufforge::testing::oracle_text(reads));
    CHECK(report.counters.at(Phase::store, Metric::bytes_put_store) == 0);
    // Shuffled bytes equal the total suffix text length.
    std::uint64_t text_bytes = 0;
    for (const auto& r : reads)
        text_bytes += r.text.size() * (r.text.size() + 1) / 2;
    CHECK(report.counters.at(Phase::shuffle, Metric::bytes_shuffled) == text_bytes);
}

TEST_CASE("measured map-side writes track the model") {
    TempDir dir("model");
    const auto reads = gen_reads({2000, 50, 4});
    auto c = small_config(dir, {write_reads(dir, "in.tsv", reads)});
    c.mappers = c.reducers = c.shards = 1;
    c.map_buffer_bytes = 64 * 1024;
    c.merge_factor = 10;
    EmbeddedCluster store(1, EmbeddedTransport::in_process);
    const auto report = build_sa(c, store);
    const double output = static_cast<double>(report.suffix_count * kIndexedRecordBytes);
    const auto predicted = predict_map_side(output, 64 * 1024, 0.8, 10);
    const double measured = static_cast<double>(report.counters.at(Phase::map, Metric::bytes_written_local)) / output;
    CHECK(measured == doctest::Approx(predicted.write_units).epsilon(0.05));
    const double read = static_cast<double>(report.counters.at(Phase::map, Metric::bytes_read_local)) / output;
    CHECK(read == doctest::Approx(predicted.read_units).epsilon(0.05));
}

TEST_CASE("store failures abort the build") {
    TempDir dir("fail");
    auto c = small_config(dir, {write_reads(dir, "in.tsv", gen_reads({20, 10, 1}))});
    c.shards = 1;
    std::uint16_t dead_port = 0;
    {
        Shard shard(0, 1);
        ShardServer server(shard, Endpoint{"127.0.0.1", 0});
        dead_port = server.port();
    }
    RemoteCluster dead({Endpoint{"127.0.0.1", dead_port}});
    CHECK_THROWS_AS(build_sa(c, dead), TransportError);

    EmbeddedCluster wrong(3, EmbeddedTransport::in_process);
    CHECK_THROWS_AS(build_sa(c, wrong), ConfigError);

    c.inputs = {dir / "missing.tsv"};
    EmbeddedCluster one(1, EmbeddedTransport::in_process);
    CHECK_THROWS_AS(build_sa(c, one), IngestError);
}
