#include "sufforge/wire.hpp"

#include <doctest.h>

#include <random>

using namespace sufforge;
using namespace sufforge::wire;

TEST_CASE("GET frame layout is big-endian with a self-inclusive length") {
    const auto frame = encode_request(GetRequest{0x0102030405060708ULL});
    const Bytes expected{0x00, 0x00, 0x00, 0x0D, 0x02, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08};
    CHECK(frame == expected);
}

TEST_CASE("MPUT frame layout") {
    const auto frame = encode_request(MputRequest{{Read{1, "AC$"}}});
    const Bytes expected{0x00, 0x00, 0x00, 0x16, 0x01, // length 22, MPUT
                         0x00, 0x00, 0x00, 0x01,       // count
                         0, 0, 0, 0, 0, 0, 0, 1,       // seq
                         0x00, 0x03, 'A', 'C', '$'};   // len, text
    CHECK(frame == expected);
}

TEST_CASE("MGETSUFFIX reply encodes markers as negative lengths") {
    const std::vector<SuffixItem> items{{ItemStatus::ok, "GT$"}, {ItemStatus::not_found, {}},
                                        {ItemStatus::range_error, {}}};
    const auto frame = encode_mget_reply(items);
    const Bytes expected{0, 0, 0, 14, 0, 0x00, 0x03, 'G', 'T', '$', 0xFF, 0xFF, 0xFF, 0xFE};
    CHECK(frame == expected);
    CHECK(decode_mget_reply(frame, 3) == items);
}

TEST_CASE("request round trip over random frames") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 2000; ++i) {
        Request req;
        switch (rng() % 3) {
        case 0: {
            MputRequest m;
            for (auto n = rng() % 8; n > 0; --n) {
                Read r{rng(), {}};
                for (auto k = rng() % 30; k > 0; --k)
                    r.text.push_back("ACGT$N"[rng() % 6]);
                m.reads.push_back(r);
            }
            req = m;
            break;
        }
        case 1:
            req = GetRequest{rng()};
            break;
        default: {
            MgetSuffixRequest g;
            for (auto n = rng() % 8; n > 0; --n)
                g.indexes.push_back(SuffixIndex{rng()});
            req = g;
        }
        }
        REQUIRE(decode_request(encode_request(req)) == req);
    }
}

TEST_CASE("malformed frames are rejected") {
    auto frame = encode_request(GetRequest{7});
    auto truncated = frame;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_request(truncated), ProtocolError);

    auto bad_opcode = frame;
    bad_opcode[4] = 0x09;
    CHECK_THROWS_AS(decode_request(bad_opcode), ProtocolError);

    auto mget = encode_request(MgetSuffixRequest{{SuffixIndex{1}, SuffixIndex{2}}});
    mget[8] = 3; // count says 3, payload holds 2
    CHECK_THROWS_AS(decode_request(mget), ProtocolError);

    CHECK_THROWS_AS(decode_request(Bytes{0, 0, 0}), ProtocolError);
}

TEST_CASE("MPUT and GET replies") {
    const MputAck ack{3, {{1, RejectReason::invalid_read}, {4, RejectReason::wrong_shard}}};
    CHECK(decode_mput_reply(encode_mput_reply(ack)) == ack);

    const std::string text = "ACGT$";
    CHECK(decode_get_reply(encode_get_reply(&text)) == text);
    CHECK_FALSE(decode_get_reply(encode_get_reply(nullptr)).has_value());
    CHECK(reply_status(encode_reply(Status::unknown_opcode)) == Status::unknown_opcode);
    CHECK_THROWS_AS(decode_mput_reply(encode_reply(Status::bad_request)), ProtocolError);
}
