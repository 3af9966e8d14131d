#include "cookiescan/cookie.hpp"
#include "cookiescan/packet.hpp"

#include "doctest.h"
#include "support.hpp"

#include <random>

using namespace cookiescan;
using testsupport::from_hex;

namespace {

struct Golden {
    std::string name;
    std::uint32_t seq, ack;
    Bytes frame;
};

std::vector<Golden> golden() {
    std::vector<Golden> out;
    for (const auto& r : testsupport::read_table("fixtures/golden_frames.hex"))
        out.push_back({r[0], static_cast<std::uint32_t>(std::stoul(r[1], nullptr, 16)),
                       static_cast<std::uint32_t>(std::stoul(r[2], nullptr, 16)), from_hex(r[3])});
    return out;
}

const Golden& find(const std::vector<Golden>& g, const std::string& name) {
    for (const auto& x : g)
        if (x.name == name) return x;
    throw std::runtime_error("no golden frame " + name);
}

const QuadKey kQuads[3] = {
    {Ipv4{10, 0, 0, 1}, 40000, Ipv4{192, 0, 2, 7}, 80},
    {Ipv4{172, 16, 5, 9}, 61000, Ipv4{198, 51, 100, 200}, 443},
    {Ipv4{10, 255, 0, 254}, 32768, Ipv4{203, 0, 113, 1}, 8080},
};
const std::uint32_t kCookies[3] = {0x3011BEEF, 0x10FFFF80, 0xF0000000};
const std::uint32_t kRemoteSeq[3] = {1000, 0xFFFFFFFF, 0x12345678};

Bytes payload_for(std::uint32_t cookie) {
    const std::string base = "hello, cookiescan";
    std::string p;
    while (p.size() < decode(cookie).content_len) p += base;
    p.resize(decode(cookie).content_len);
    return testsupport::bytes_of(p);
}

PacketView view(const ParseResult& r) {
    REQUIRE(std::holds_alternative<PacketView>(r));
    return std::get<PacketView>(r);
}

} // namespace

TEST_CASE("checksum of an all-zero buffer is 0xFFFF") {
    const std::uint8_t zeros[20] = {};
    CHECK(internet_checksum(zeros) == 0xFFFF);
}

TEST_CASE("builders match the golden frames byte for byte") {
    const auto g = golden();
    const BuildParams p;
    for (int i = 0; i < 3; ++i) {
        const std::string q = "q" + std::to_string(i);
        CAPTURE(q);
        const Bytes payload = payload_for(kCookies[i]);
        CHECK(build_syn(kQuads[i], kCookies[i], p) == find(g, q + "-syn").frame);
        CHECK(build_ack_with_payload(kQuads[i], kCookies[i], kRemoteSeq[i], payload, p) == find(g, q + "-ack").frame);
        const std::uint32_t rst_seq = kCookies[i] + decode(kCookies[i]).content_len + 1u;
        CHECK(rst_seq == find(g, q + "-rst").seq);
        CHECK(build_rst(kQuads[i], rst_seq) == find(g, q + "-rst").frame);
    }
}

TEST_CASE("parse a minimal 40-byte SYN-ACK") {
    const auto g = golden();
    const auto& f = find(g, "synack40").frame;
    REQUIRE(f.size() == 40);
    const auto pv = view(parse(f, 2.5));
    CHECK(pv.flags == (tcp_flags::kSyn | tcp_flags::kAck));
    CHECK(pv.payload.empty());
    CHECK(pv.quad == kQuads[0].swapped());
    CHECK(pv.seqno == 1000);
    CHECK(pv.ackno == 0x3011BEF0u);
    CHECK(pv.window == 8192);
    CHECK(pv.ip_id == 0x1234);
    CHECK(pv.ts == 2.5);
}

TEST_CASE("parse rejects malformed frames by reason") {
    const auto g = golden();
    Bytes f = find(g, "synack40").frame;

    SUBCASE("length byte flipped") {
        f[3] ^= 0x01; // total length 41 > 40 bytes captured
        CHECK(std::get<RejectReason>(parse(f)) == RejectReason::Truncated);
    }
    SUBCASE("UDP") {
        f[9] = 17;
        CHECK(std::get<RejectReason>(parse(f)) == RejectReason::BadProto);
    }
    SUBCASE("IPv6 version nibble") {
        f[0] = 0x65;
        CHECK(std::get<RejectReason>(parse(f)) == RejectReason::BadVersion);
    }
    SUBCASE("empty") { CHECK(std::get<RejectReason>(parse(Bytes{})) == RejectReason::BadVersion); }
    SUBCASE("short header") {
        f.resize(19);
        CHECK(std::get<RejectReason>(parse(f)) == RejectReason::Truncated);
    }
    SUBCASE("IP checksum") {
        f[8] ^= 0x10; // ttl
        CHECK(std::get<RejectReason>(parse(f)) == RejectReason::BadChecksum);
    }
    SUBCASE("TCP checksum") {
        f[35] ^= 0x01; // window low byte
        CHECK(std::get<RejectReason>(parse(f)) == RejectReason::BadChecksum);
    }
    SUBCASE("data offset past the end") {
        Bytes syn = find(g, "q0-syn").frame;
        syn[32] = 0xF0;
        CHECK(std::get<RejectReason>(parse(syn)) == RejectReason::Truncated);
    }
}

TEST_CASE("parse counters tally per reason") {
    const auto g = golden();
    ParseCounters pc;
    Bytes bad = find(g, "synack40").frame;
    bad[9] = 17;
    CHECK(pc.count(parse(find(g, "synack40").frame)) != nullptr);
    CHECK(pc.count(parse(bad)) == nullptr);
    CHECK(pc.count(parse(Bytes{0x60})) == nullptr);
    CHECK(pc.accepted == 1);
    CHECK(pc.rejected[static_cast<std::size_t>(RejectReason::BadProto)] == 1);
    CHECK(pc.rejected[static_cast<std::size_t>(RejectReason::BadVersion)] == 1);
    CHECK(pc.total_rejected() == 2);
}

TEST_CASE("SYN builder") {
    const BuildParams p;
    const Bytes f = build_syn(kQuads[0], 0x3011BEEF, p);
    const auto pv = view(parse(f));
    CHECK(pv.quad == kQuads[0]);
    CHECK(pv.seqno == 0x3011BEEFu);
    CHECK(pv.ackno == 0);
    CHECK(pv.flags == tcp_flags::kSyn);
    CHECK(pv.window == 1024);
    CHECK(pv.ttl == 64);
    CHECK(pv.ip_id == 0xBEEF);
    CHECK(pv.payload.empty());
    CHECK((f[6] & 0x40) != 0); // DF
    CHECK(f.size() == 44);     // MSS option
    CHECK(f[40] == 2);
    CHECK(((f[42] << 8) | f[43]) == 1460);

    BuildParams zero;
    zero.advertised_window = 0;
    CHECK_THROWS_AS(build_syn(kQuads[0], 1, zero), std::invalid_argument);

    BuildParams no_mss;
    no_mss.mss_option.reset();
    CHECK(build_syn(kQuads[0], 1, no_mss).size() == 40);
}

TEST_CASE("ACK with payload") {
    const BuildParams p;
    const Bytes payload = payload_for(0x3011BEEF);
    REQUIRE(payload.size() == 17);
    const Bytes f = build_ack_with_payload(kQuads[0], 0x3011BEEF, 1000, payload, p);
    const auto pv = view(parse(f));
    CHECK(pv.seqno == 0x3011BEF0u);
    CHECK(pv.ackno == 1001);
    CHECK(pv.flags == (tcp_flags::kAck | tcp_flags::kPsh));
    CHECK(Bytes(pv.payload.begin(), pv.payload.end()) == payload);

    SUBCASE("empty payload is a bare ACK") {
        const Bytes bare = build_ack_with_payload(kQuads[0], 0x30000000, 7, {}, p);
        const auto b = view(parse(bare));
        CHECK(b.flags == tcp_flags::kAck);
        CHECK(b.seqno == 0x30000001u);
        CHECK(b.payload.empty());
    }
    SUBCASE("length mismatch is a build fault") {
        Bytes longer = payload;
        longer.push_back('!');
        CHECK_THROWS_AS(build_ack_with_payload(kQuads[0], 0x3011BEEF, 1000, longer, p), BuildFault);
    }
}

TEST_CASE("RST builder") {
    const Bytes after_banner = build_rst(kQuads[0], 0x3011BEEFu + 17u + 1u);
    const auto pv = view(parse(after_banner));
    CHECK(pv.seqno == 0x3011BF01u);
    CHECK(pv.flags == tcp_flags::kRst);
    CHECK(pv.ackno == 0);
    CHECK(pv.window == 0);
    CHECK(pv.payload.empty());

    const auto zw = view(parse(build_rst(kQuads[1], 0x10FFFF80u + 1u)));
    CHECK(zw.seqno == 0x10FFFF81u);
}

TEST_CASE("parse inverts every builder over random inputs") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 3000; ++i) {
        const QuadKey q{Ipv4{static_cast<std::uint32_t>(rng())}, static_cast<std::uint16_t>(rng() | 1),
                        Ipv4{static_cast<std::uint32_t>(rng())}, static_cast<std::uint16_t>(rng() | 1)};
        const auto len = static_cast<std::uint16_t>(rng() % 1461);
        const std::uint32_t cookie = (static_cast<std::uint32_t>(rng() % 16) << 28) | (std::uint32_t{len} << 16) |
                                     static_cast<std::uint16_t>(rng());
        const auto remote = static_cast<std::uint32_t>(rng());
        BuildParams p;
        p.advertised_window = static_cast<std::uint16_t>(1 + rng() % 65535);
        p.ttl = static_cast<std::uint8_t>(1 + rng() % 255);
        Bytes payload(len);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());

        const Bytes syn = build_syn(q, cookie, p);
        const Bytes ack = build_ack_with_payload(q, cookie, remote, payload, p);
        const Bytes rst = build_rst(q, cookie + len + 1u, p.ttl);
        REQUIRE(testsupport::rfc1071_ok(syn));
        REQUIRE(testsupport::rfc1071_ok(ack));
        REQUIRE(testsupport::rfc1071_ok(rst));

        const auto s = view(parse(syn));
        REQUIRE(s.quad == q);
        REQUIRE(s.seqno == cookie);
        REQUIRE(s.window == p.advertised_window);
        REQUIRE(s.ttl == p.ttl);
        REQUIRE(s.payload.empty());

        const auto a = view(parse(ack));
        REQUIRE(a.quad == q);
        REQUIRE(a.seqno == cookie + 1u);
        REQUIRE(a.ackno == remote + 1u);
        REQUIRE(Bytes(a.payload.begin(), a.payload.end()) == payload);

        const auto r = view(parse(rst));
        REQUIRE(r.quad == q);
        REQUIRE(r.seqno == cookie + len + 1u);
        REQUIRE(r.payload.empty());
        REQUIRE(r.flags == tcp_flags::kRst);
    }
}

TEST_CASE("segment builder handles odd lengths and FIN") {
    const std::string text = "SSH-2.0-x\r\n"; // odd length
    const Bytes body = testsupport::bytes_of(text);
    const Bytes f = build_segment({.quad = kQuads[1],
                                   .seq = 5,
                                   .ack = 6,
                                   .flags = tcp_flags::kFin | tcp_flags::kPsh | tcp_flags::kAck,
                                   .window = 100,
                                   .ip_id = 9,
                                   .ttl = 3,
                                   .mss = std::nullopt,
                                   .payload = body});
    CHECK(testsupport::rfc1071_ok(f));
    const auto pv = view(parse(f));
    CHECK(pv.has(tcp_flags::kFin | tcp_flags::kAck));
    CHECK(pv.payload.size() == text.size());
    CHECK(frame_destination(f) == kQuads[1].dst_ip);
    CHECK_FALSE(frame_destination(Bytes{0x45}).has_value());
}

TEST_CASE("fragments are rejected") {
    Bytes f = build_rst(kQuads[0], 1);
    f[6] = 0x20; // MF
    // Fix the IP checksum so only the fragment bit is wrong.
    f[10] = f[11] = 0;
    const std::uint16_t c = internet_checksum(std::span(f).first(20));
    f[10] = static_cast<std::uint8_t>(c >> 8);
    f[11] = static_cast<std::uint8_t>(c);
    CHECK(std::get<RejectReason>(parse(f)) == RejectReason::Truncated);
}

TEST_CASE("offloaded TCP checksum is completed in place") {
    const QuadKey q{Ipv4{127, 0, 0, 1}, 8080, Ipv4{10, 201, 0, 1}, 40000};
    const auto payload = testsupport::bytes_of("banner");
    Bytes frame = build_segment({.quad = q, .seq = 1, .ack = 2, .flags = tcp_flags::kAck, .window = 512, .payload = payload});
    const Bytes good = frame;
    frame[36] ^= 0x5A; // what a capture of a partial-checksum frame looks like
    CHECK(std::holds_alternative<RejectReason>(parse(frame)));
    REQUIRE(complete_tcp_checksum(frame));
    CHECK(frame == good);
    CHECK(testsupport::rfc1071_ok(frame));

    Bytes junk{0x60, 0, 0, 0};
    CHECK_FALSE(complete_tcp_checksum(junk));
}
