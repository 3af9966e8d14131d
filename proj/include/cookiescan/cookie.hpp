#pragma once

// Connection state carried in TCP sequence/acknowledgment numbers.
//
// Layout of the 32-bit initial sequence number:
//
//   31      28 27                16 15                 0
//  +----------+--------------------+--------------------+
//  |probe_type|    content_len     |     conn_hash      |
//  +----------+--------------------+--------------------+
//
// A SYN-ACK acknowledges cookie + 1; a data segment sent after our
// piggybacked probe acknowledges cookie + content_len + 1.

#include "cookiescan/types.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace cookiescan {

inline constexpr unsigned kProbeTypeBits = 4;
inline constexpr unsigned kContentLenBits = 12;
inline constexpr unsigned kMaxProbeTypes = 1u << kProbeTypeBits;        // 16
inline constexpr unsigned kMaxContentLen = (1u << kContentLenBits) - 1; // 4095

/// Per-run 128-bit key for the quadruple hash.
class HashSecret {
public:
    static constexpr std::size_t kSize = 16;

    HashSecret() = default;
    explicit HashSecret(const std::array<std::uint8_t, kSize>& key) : key_(key) {}

    /// Fresh key from the OS CSPRNG.
    static HashSecret random();
    /// Reproducible key expanded from a 64-bit seed.
    static HashSecret from_seed(std::uint64_t seed);

    const std::array<std::uint8_t, kSize>& bytes() const { return key_; }

    friend bool operator==(const HashSecret&, const HashSecret&) = default;

private:
    std::array<std::uint8_t, kSize> key_{};
};

struct Cookie {
    std::uint8_t probe_type = 0;
    std::uint16_t content_len = 0;
    std::uint16_t conn_hash = 0;

    friend constexpr bool operator==(const Cookie&, const Cookie&) = default;
};

/// Keyed PRF over the full 4-tuple of a segment we send, truncated to 16 bits.
std::uint16_t hash_quad(const QuadKey& sent, const HashSecret& secret);

constexpr bool cookie_in_range(std::uint32_t probe_type, std::uint32_t content_len) {
    return probe_type < kMaxProbeTypes && content_len <= kMaxContentLen;
}

/// Throws std::out_of_range when probe_type or content_len do not fit their fields.
std::uint32_t encode(const Cookie& c);

constexpr Cookie decode(std::uint32_t word) {
    return {static_cast<std::uint8_t>(word >> 28),
            static_cast<std::uint16_t>((word >> 16) & kMaxContentLen),
            static_cast<std::uint16_t>(word & 0xFFFF)};
}

// Hash-level classifiers; the quad-level wrappers below compute the hash and
// delegate here. Exposed separately so bulk verification can sweep hashes
// directly.
constexpr std::optional<Cookie> classify_synack_hash(std::uint32_t ackno, std::uint16_t expected_hash) {
    const std::uint32_t cookie = ackno - 1u;
    if (static_cast<std::uint16_t>(cookie) != expected_hash) return std::nullopt;
    return decode(cookie);
}

constexpr std::optional<Cookie> classify_transmit_hash(std::uint32_t ackno, std::uint16_t expected_hash) {
    // ackno = cookie + L + 1 with L < 4096 and a 16-bit hash, so the low half
    // carries at most once into the length field. Try "no carry" then "carry"
    // (which wraps L1 = 0 to 4095).
    const std::uint32_t field = (ackno >> 16) & kMaxContentLen;
    for (std::uint32_t borrow = 0; borrow <= 1; ++borrow) {
        const std::uint32_t len = (field - borrow) & kMaxContentLen;
        const std::uint32_t cookie = ackno - len - 1u;
        if (((cookie >> 16) & kMaxContentLen) == len && static_cast<std::uint16_t>(cookie) == expected_hash)
            return decode(cookie);
    }
    return std::nullopt;
}

/// SYN_SENT check for a SYN-ACK or RST. `reply` is the quad of the received segment.
std::optional<Cookie> classify_synack(std::uint32_t ackno, const QuadKey& reply, const HashSecret& secret);

/// TRANSMIT check for a data-bearing segment that follows our piggybacked probe.
std::optional<Cookie> classify_transmit(std::uint32_t ackno, const QuadKey& reply, const HashSecret& secret);

} // namespace cookiescan
