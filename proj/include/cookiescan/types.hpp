#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cookiescan {

using Bytes = std::vector<std::uint8_t>;

/// Seconds on whichever clock drives the run (virtual in simnet, steady in live mode).
using Timestamp = double;

/// IPv4 address in host byte order.
struct Ipv4 {
    std::uint32_t value = 0;

    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

    friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

    std::string to_string() const;
    static std::optional<Ipv4> parse(std::string_view dotted);
};

/// One side of a TCP conversation.
struct Endpoint {
    Ipv4 ip;
    std::uint16_t port = 0;

    friend constexpr auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

/// Connection quadruple as seen on the wire: src sent the segment, dst receives it.
struct QuadKey {
    Ipv4 src_ip;
    std::uint16_t src_port = 0;
    Ipv4 dst_ip;
    std::uint16_t dst_port = 0;

    constexpr QuadKey swapped() const { return {dst_ip, dst_port, src_ip, src_port}; }
    constexpr Endpoint src() const { return {src_ip, src_port}; }
    constexpr Endpoint dst() const { return {dst_ip, dst_port}; }

    friend constexpr auto operator<=>(const QuadKey&, const QuadKey&) = default;
};

struct QuadKeyHash {
    std::size_t operator()(const QuadKey& q) const noexcept {
        std::uint64_t a = (std::uint64_t{q.src_ip.value} << 32) | q.dst_ip.value;
        std::uint64_t b = (std::uint64_t{q.src_port} << 16) | q.dst_port;
        a ^= b * 0x9E3779B97F4A7C15ULL;
        a ^= a >> 29;
        a *= 0xBF58476D1CE4E5B9ULL;
        return static_cast<std::size_t>(a ^ (a >> 32));
    }
};

} // namespace cookiescan
