#include "cookiescan/packet.hpp"

#include "cookiescan/cookie.hpp"

namespace cookiescan {

namespace {

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }
std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}
void put16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 8);
    p[1] = static_cast<std::uint8_t>(v);
}
void put32(std::uint8_t* p, std::uint32_t v) {
    put16(p, static_cast<std::uint16_t>(v >> 16));
    put16(p + 2, static_cast<std::uint16_t>(v));
}

std::uint32_t pseudo_header_sum(Ipv4 src, Ipv4 dst, std::size_t tcp_len) {
    std::uint32_t sum = 0;
    sum += src.value >> 16;
    sum += src.value & 0xFFFF;
    sum += dst.value >> 16;
    sum += dst.value & 0xFFFF;
    sum += 6; // IPPROTO_TCP
    sum += static_cast<std::uint32_t>(tcp_len);
    return sum;
}

} // namespace

const char* to_string(RejectReason r) {
    switch (r) {
    case RejectReason::BadVersion: return "bad-version";
    case RejectReason::BadProto: return "bad-proto";
    case RejectReason::Truncated: return "truncated";
    case RejectReason::BadChecksum: return "bad-checksum";
    }
    return "unknown";
}

std::uint16_t internet_checksum(std::span<const std::uint8_t> data, std::uint32_t initial) {
    std::uint64_t sum = initial;
    std::size_t i = 0;
    for (; i + 1 < data.size(); i += 2) sum += be16(&data[i]);
    if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

bool complete_tcp_checksum(std::span<std::uint8_t> frame) {
    if (frame.size() < kIpv4HeaderLen || (frame[0] >> 4) != 4 || frame[9] != 6) return false;
    const std::size_t ihl = static_cast<std::size_t>(frame[0] & 0x0F) * 4;
    const std::size_t total_len = be16(&frame[2]);
    if (ihl < kIpv4HeaderLen || total_len < ihl + kTcpHeaderLen || total_len > frame.size()) return false;
    std::uint8_t* tcp = frame.data() + ihl;
    const std::size_t tcp_len = total_len - ihl;
    put16(tcp + 16, 0);
    put16(tcp + 16, internet_checksum({tcp, tcp_len}, pseudo_header_sum(Ipv4{be32(&frame[12])}, Ipv4{be32(&frame[16])}, tcp_len)));
    return true;
}

ParseResult parse(std::span<const std::uint8_t> frame, Timestamp ts) {
    if (frame.empty() || (frame[0] >> 4) != 4) return RejectReason::BadVersion;
    if (frame.size() < kIpv4HeaderLen) return RejectReason::Truncated;

    const std::size_t ihl = static_cast<std::size_t>(frame[0] & 0x0F) * 4;
    const std::size_t total_len = be16(&frame[2]);
    if (ihl < kIpv4HeaderLen || total_len < ihl + kTcpHeaderLen || total_len > frame.size())
        return RejectReason::Truncated;
    if (frame[9] != 6) return RejectReason::BadProto;
    if (internet_checksum(frame.first(ihl)) != 0) return RejectReason::BadChecksum;
    // Fragments cannot be handled without reassembly; treat them as incomplete.
    if ((be16(&frame[6]) & 0x3FFF) != 0) return RejectReason::Truncated;

    const auto ip_packet = frame.first(total_len);
    const auto tcp = ip_packet.subspan(ihl);
    const std::size_t doff = static_cast<std::size_t>(tcp[12] >> 4) * 4;
    if (doff < kTcpHeaderLen || doff > tcp.size()) return RejectReason::Truncated;

    PacketView pv;
    pv.quad.src_ip = Ipv4{be32(&frame[12])};
    pv.quad.dst_ip = Ipv4{be32(&frame[16])};
    if (internet_checksum(tcp, pseudo_header_sum(pv.quad.src_ip, pv.quad.dst_ip, tcp.size())) != 0)
        return RejectReason::BadChecksum;

    pv.ip_id = be16(&frame[4]);
    pv.ttl = frame[8];
    pv.quad.src_port = be16(&tcp[0]);
    pv.quad.dst_port = be16(&tcp[2]);
    pv.seqno = be32(&tcp[4]);
    pv.ackno = be32(&tcp[8]);
    pv.flags = tcp[13] & 0x3F;
    pv.window = be16(&tcp[14]);
    pv.payload = tcp.subspan(doff);
    pv.ts = ts;
    return pv;
}

Bytes build_segment(const SegmentSpec& s) {
    const std::size_t opt_len = s.mss ? 4 : 0;
    const std::size_t tcp_len = kTcpHeaderLen + opt_len + s.payload.size();
    const std::size_t total = kIpv4HeaderLen + tcp_len;
    if (total > 0xFFFF) throw std::length_error("segment exceeds IPv4 total length");

    Bytes out(total, 0);
    std::uint8_t* ip = out.data();
    ip[0] = 0x45;
    put16(ip + 2, static_cast<std::uint16_t>(total));
    put16(ip + 4, s.ip_id);
    put16(ip + 6, 0x4000); // DF
    ip[8] = s.ttl;
    ip[9] = 6;
    put32(ip + 12, s.quad.src_ip.value);
    put32(ip + 16, s.quad.dst_ip.value);
    put16(ip + 10, internet_checksum({ip, kIpv4HeaderLen}));

    std::uint8_t* tcp = ip + kIpv4HeaderLen;
    put16(tcp, s.quad.src_port);
    put16(tcp + 2, s.quad.dst_port);
    put32(tcp + 4, s.seq);
    put32(tcp + 8, s.ack);
    tcp[12] = static_cast<std::uint8_t>(((kTcpHeaderLen + opt_len) / 4) << 4);
    tcp[13] = s.flags;
    put16(tcp + 14, s.window);
    if (s.mss) {
        tcp[20] = 2;
        tcp[21] = 4;
        put16(tcp + 22, *s.mss);
    }
    std::copy(s.payload.begin(), s.payload.end(), tcp + kTcpHeaderLen + opt_len);
    put16(tcp + 16, internet_checksum({tcp, tcp_len}, pseudo_header_sum(s.quad.src_ip, s.quad.dst_ip, tcp_len)));
    return out;
}

Bytes build_syn(const QuadKey& q, std::uint32_t cookie32, const BuildParams& p) {
    if (p.advertised_window == 0) throw std::invalid_argument("advertised window must be nonzero");
    return build_segment({.quad = q,
                          .seq = cookie32,
                          .ack = 0,
                          .flags = tcp_flags::kSyn,
                          .window = p.advertised_window,
                          .ip_id = static_cast<std::uint16_t>(cookie32),
                          .ttl = p.ttl,
                          .mss = p.mss_option,
                          .payload = {}});
}

Bytes build_ack_with_payload(const QuadKey& q, std::uint32_t cookie32, std::uint32_t remote_seq,
                             std::span<const std::uint8_t> payload, const BuildParams& p) {
    const Cookie c = decode(cookie32);
    if (payload.size() != c.content_len)
        throw BuildFault("probe payload is " + std::to_string(payload.size()) + " bytes but cookie encodes " +
                         std::to_string(c.content_len));
    if (p.advertised_window == 0) throw std::invalid_argument("advertised window must be nonzero");
    const std::uint8_t flags = payload.empty() ? tcp_flags::kAck : (tcp_flags::kAck | tcp_flags::kPsh);
    return build_segment({.quad = q,
                          .seq = cookie32 + 1u,
                          .ack = remote_seq + 1u,
                          .flags = flags,
                          .window = p.advertised_window,
                          .ip_id = static_cast<std::uint16_t>(cookie32),
                          .ttl = p.ttl,
                          .mss = std::nullopt,
                          .payload = payload});
}

Bytes build_rst(const QuadKey& q, std::uint32_t seq, std::uint8_t ttl) {
    return build_segment({.quad = q,
                          .seq = seq,
                          .ack = 0,
                          .flags = tcp_flags::kRst,
                          .window = 0,
                          .ip_id = static_cast<std::uint16_t>(seq),
                          .ttl = ttl,
                          .mss = std::nullopt,
                          .payload = {}});
}

std::optional<Ipv4> frame_destination(std::span<const std::uint8_t> frame) {
    if (frame.size() < kIpv4HeaderLen || (frame[0] >> 4) != 4) return std::nullopt;
    return Ipv4{be32(&frame[16])};
}

} // namespace cookiescan
