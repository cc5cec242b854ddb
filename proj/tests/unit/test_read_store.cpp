#include "sufforge/error.hpp"
#include "sufforge/read_store.hpp"

#include <doctest.h>

#include <random>
#include <thread>

using namespace sufforge;

namespace {

std::string random_read(std::mt19937_64& rng, std::size_t max_len = 120) {
    std::string s;
    for (auto n = 1 + rng() % max_len; n > 0; --n)
        s.push_back("ACGT"[rng() % 4]);
    return s + '$';
}

} // namespace

TEST_CASE("shard_of is seq mod shard count") {
    CHECK(shard_of(17, 16) == 1);
    CHECK(shard_of(0, 16) == 0);
    CHECK(shard_of(32, 16) == 0);
}

TEST_CASE("parse_endpoint") {
    CHECK(parse_endpoint("127.0.0.1:7000") == Endpoint{"127.0.0.1", 7000});
    CHECK(parse_endpoint("localhost:0") == Endpoint{"localhost", 0});
    CHECK_THROWS_AS(parse_endpoint("localhost"), ConfigError);
    CHECK_THROWS_AS(parse_endpoint("host:99999"), ConfigError);
    CHECK_THROWS_AS(parse_endpoint(":80"), ConfigError);
}

TEST_CASE("mput acknowledgements") {
    EmbeddedCluster cluster(16, EmbeddedTransport::in_process);
    auto client = cluster.connect();

    const std::vector<Read> batch{{0, "ACGT$"}, {16, "TTTT$"}};
    CHECK(client.mput_reads(0, batch).stored == 2);
    CHECK(client.mput_reads(0, std::vector<Read>{}).stored == 0);

    const std::vector<Read> one{{1, "ACGT$"}};
    CHECK(client.mput_reads(1, one).stored == 1);
    const std::vector<Read> again{{1, "GG$"}};
    CHECK(client.mput_reads(1, again).stored == 1);
    CHECK(client.get_read(1) == "GG$");
}

TEST_CASE("mput reports invalid and misrouted reads per item") {
    EmbeddedCluster cluster(2, EmbeddedTransport::in_process);
    auto client = cluster.connect();
    const std::vector<Read> batch{{0, "ACGT$"}, {2, "ACNT$"}, {3, "AC$"}, {4, "AC"}, {6, "T$"}};
    const auto ack = client.mput_reads(0, batch);
    CHECK(ack.stored == 2);
    REQUIRE(ack.rejected.size() == 3);
    CHECK(ack.rejected[0] == wire::Rejection{1, wire::RejectReason::invalid_read});
    CHECK(ack.rejected[1] == wire::Rejection{2, wire::RejectReason::wrong_shard});
    CHECK(ack.rejected[2] == wire::Rejection{3, wire::RejectReason::invalid_read});
    CHECK_THROWS_AS(client.get_read(2), NotFoundError);
}

TEST_CASE("get_read") {
    EmbeddedCluster cluster(4, EmbeddedTransport::in_process);
    auto client = cluster.connect();
    const std::vector<Read> r{{7, "ACGT$"}};
    client.mput_reads(3, r);
    CHECK(client.get_read(7) == "ACGT$");
    CHECK_THROWS_AS(client.get_read(99), NotFoundError);
}

TEST_CASE("mget_suffix examples") {
    EmbeddedCluster cluster(1, EmbeddedTransport::in_process);
    auto client = cluster.connect();
    const std::vector<Read> r{{10, "ACGT$"}};
    client.mput_reads(0, r);

    auto one = client.mget_suffix(std::vector<SuffixIndex>{SuffixIndex{10002}});
    REQUIRE(one.size() == 1);
    CHECK(one[0].text == "GT$");

    auto two = client.mget_suffix(std::vector<SuffixIndex>{SuffixIndex{10000}, SuffixIndex{10003}});
    CHECK(two[0].text == "ACGT$");
    CHECK(two[1].text == "T$");

    auto missing = client.mget_suffix(std::vector<SuffixIndex>{SuffixIndex{99000}, SuffixIndex{10005}});
    CHECK(missing[0].status == wire::ItemStatus::not_found);
    CHECK(missing[1].status == wire::ItemStatus::range_error);
}

TEST_CASE("shards never answer for seq they do not own") {
    Shard shard(1, 4);
    const std::vector<Read> reads{{5, "ACGT$"}};
    CHECK(shard.mput(reads).stored == 1);
    CHECK(shard.get(5) == std::optional<std::string>("ACGT$"));
    CHECK_FALSE(shard.get(6).has_value());
    const std::vector<SuffixIndex> idx{SuffixIndex{6000}, SuffixIndex{5001}};
    auto items = shard.mget_suffix(idx);
    CHECK(items[0].status == wire::ItemStatus::not_found);
    CHECK(items[1].text == "CGT$");
}

TEST_CASE("shard answers malformed and unknown frames with status codes") {
    Shard shard(0, 1);
    auto frame = wire::encode_request(wire::GetRequest{1});
    frame[4] = 0x7F;
    CHECK(wire::reply_status(shard.handle(frame)) == wire::Status::unknown_opcode);
    frame[4] = 0x02;
    frame.push_back(0);
    CHECK(wire::reply_status(shard.handle(frame)) == wire::Status::bad_request);
}

TEST_CASE("mget_suffix slices, batch equivalence and byte accounting") {
    std::mt19937_64 rng(3);
    EmbeddedCluster cluster(3, EmbeddedTransport::in_process);
    auto client = cluster.connect();
    std::vector<Read> reads;
    for (std::uint64_t seq = 0; seq < 300; ++seq)
        reads.push_back({seq * 7, random_read(rng)});
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<Read> batch;
        for (const auto& r : reads)
            if (shard_of(r.seq, 3) == s)
                batch.push_back(r);
        REQUIRE(client.mput_reads(s, batch).stored == batch.size());
    }

    std::vector<SuffixIndex> idx;
    std::uint64_t expected_bytes = 0, read_bytes = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto& r = reads[rng() % reads.size()];
        const auto off = rng() % r.text.size();
        idx.push_back(pack_index(r.seq, static_cast<std::int64_t>(off)));
        expected_bytes += r.text.size() - off;
        read_bytes += r.text.size();
    }
    const auto batch = client.mget_suffix(idx);
    std::uint64_t got = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto [seq, off] = unpack_index(idx[i]);
        const auto single = client.mget_suffix(std::vector<SuffixIndex>{idx[i]});
        REQUIRE(batch[i] == single[0]);
        REQUIRE(batch[i].text == client.get_read(seq).substr(off));
        got += batch[i].text.size();
    }
    CHECK(got == expected_bytes);
    CHECK(got <= read_bytes);
}

TEST_CASE("TCP shards serve concurrent clients") {
    EmbeddedCluster cluster(2, EmbeddedTransport::tcp);
    REQUIRE(cluster.endpoints().size() == 2);
    {
        auto loader = cluster.connect();
        std::vector<Read> even, odd;
        for (std::uint64_t seq = 0; seq < 400; ++seq)
            (seq % 2 ? odd : even).push_back({seq, std::string(1 + seq % 50, "ACGT"[seq % 4]) + "$"});
        REQUIRE(loader.mput_reads(0, even).stored == 200);
        REQUIRE(loader.mput_reads(1, odd).stored == 200);
    }
    std::vector<std::thread> workers;
    std::atomic<int> mismatches{0};
    for (int w = 0; w < 6; ++w)
        workers.emplace_back([&, w] {
            auto client = cluster.connect();
            std::mt19937_64 rng(static_cast<std::uint64_t>(w));
            for (int i = 0; i < 200; ++i) {
                std::vector<SuffixIndex> idx;
                std::vector<std::string> want;
                for (int k = 0; k < 10; ++k) {
                    const std::uint64_t seq = rng() % 400;
                    const std::size_t len = 2 + seq % 50;
                    const std::size_t off = rng() % len;
                    idx.push_back(pack_index(seq, static_cast<std::int64_t>(off)));
                    want.push_back((std::string(len - 1, "ACGT"[seq % 4]) + "$").substr(off));
                }
                auto items = client.mget_suffix(idx);
                for (std::size_t k = 0; k < idx.size(); ++k)
                    if (items[k].text != want[k])
                        ++mismatches;
            }
        });
    for (auto& t : workers)
        t.join();
    CHECK(mismatches == 0);
}

TEST_CASE("transport failures") {
    CHECK_THROWS_AS(RemoteCluster({}), TransportError);
    std::uint16_t dead_port = 0;
    {
        Shard shard(0, 1);
        ShardServer server(shard, {"127.0.0.1", 0});
        dead_port = server.port();
    }
    RemoteCluster remote({{"127.0.0.1", dead_port}});
    CHECK_THROWS_AS(remote.connect(), TransportError);
}

TEST_CASE("shard statistics") {
    Shard shard(0, 1);
    const std::vector<Read> reads{{0, "ACGT$"}, {1, "AC$"}};
    shard.mput(reads);
    CHECK(shard.read_count() == 2);
    CHECK(shard.text_bytes() == 8);
    CHECK(shard.footprint_bytes() > shard.text_bytes());
    const std::vector<Read> overwrite{{1, "A$"}};
    shard.mput(overwrite);
    CHECK(shard.text_bytes() == 7);
}
