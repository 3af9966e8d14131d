#pragma once

#include "cookiescan/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>

namespace cookiescan {

namespace tcp_flags {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
} // namespace tcp_flags

inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kTcpHeaderLen = 20;

/// Parsed IPv4/TCP segment. `payload` aliases the frame it was parsed from.
struct PacketView {
    QuadKey quad;
    std::uint32_t seqno = 0;
    std::uint32_t ackno = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = 0;
    std::uint16_t ip_id = 0;
    std::uint8_t ttl = 0;
    std::span<const std::uint8_t> payload;
    Timestamp ts = 0.0;

    bool has(std::uint8_t f) const { return (flags & f) == f; }
};

enum class RejectReason : std::uint8_t { BadVersion, BadProto, Truncated, BadChecksum };
inline constexpr std::size_t kRejectReasonCount = 4;
const char* to_string(RejectReason r);

using ParseResult = std::variant<PacketView, RejectReason>;

/// Parses a link-layer-stripped IPv4 datagram. Verifies the IP header checksum
/// and the TCP checksum over the pseudo-header.
ParseResult parse(std::span<const std::uint8_t> frame, Timestamp ts = 0.0);

/// Per-reason reject tally kept by whoever owns the receive path.
struct ParseCounters {
    std::array<std::uint64_t, kRejectReasonCount> rejected{};
    std::uint64_t accepted = 0;

    const PacketView* count(const ParseResult& r) {
        if (const auto* pv = std::get_if<PacketView>(&r)) {
            ++accepted;
            return pv;
        }
        ++rejected[static_cast<std::size_t>(std::get<RejectReason>(r))];
        return nullptr;
    }
    std::uint64_t total_rejected() const {
        std::uint64_t n = 0;
        for (auto v : rejected) n += v;
        return n;
    }
};

struct BuildParams {
    std::uint16_t advertised_window = 1024;
    std::uint8_t ttl = 64;
    std::optional<std::uint16_t> mss_option = 1460;
};

/// Raised when a caller hands the builder a payload that disagrees with the
/// length encoded in the cookie.
class BuildFault : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Internet checksum (RFC 1071) over `data`, continuing from a partial sum.
std::uint16_t internet_checksum(std::span<const std::uint8_t> data, std::uint32_t initial = 0);

/// Throws std::invalid_argument when the advertised window is zero.
Bytes build_syn(const QuadKey& q, std::uint32_t cookie32, const BuildParams& p);

/// Piggybacked handshake ACK: seq = cookie + 1, ack = remote_seq + 1, ACK|PSH.
/// An empty payload yields a bare ACK. Throws BuildFault on length mismatch.
Bytes build_ack_with_payload(const QuadKey& q, std::uint32_t cookie32, std::uint32_t remote_seq,
                             std::span<const std::uint8_t> payload, const BuildParams& p);

Bytes build_rst(const QuadKey& q, std::uint32_t seq, std::uint8_t ttl = 64);

/// General segment builder, also used by the simulated endpoints.
struct SegmentSpec {
    QuadKey quad;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = 0;
    std::uint16_t ip_id = 0;
    std::uint8_t ttl = 64;
    std::optional<std::uint16_t> mss;
    std::span<const std::uint8_t> payload;
};
Bytes build_segment(const SegmentSpec& s);

/// Recomputes the TCP checksum of a frame whose sender left it to hardware
/// offload. Returns false when the frame is not a well-formed IPv4/TCP datagram.
bool complete_tcp_checksum(std::span<std::uint8_t> frame);

/// Destination address of a serialized IPv4 frame, without full parsing.
std::optional<Ipv4> frame_destination(std::span<const std::uint8_t> frame);

} // namespace cookiescan
