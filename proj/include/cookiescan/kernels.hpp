#pragma once

// Bulk verification kernels. Each has an OpenMP version and a serial
// reference with identical results: all randomness is counter-based
// (a pure function of seed and loop index), so work distribution across
// threads cannot change the outcome.

#include "cookiescan/cookie.hpp"

#include <cstdint>
#include <vector>

namespace cookiescan::kernels {

struct RoundTripReport {
    std::uint64_t checked = 0;
    /// classify_transmit did not return the encoded cookie.
    std::uint64_t transmit_failures = 0;
    /// classify_synack matched a TRANSMIT ackno with content_len > 0.
    std::uint64_t synack_collisions = 0;
    /// Cases whose low half carried into the length field.
    std::uint64_t carry_cases = 0;
    /// Cases whose ackno wrapped past 2^32.
    std::uint64_t wrap_cases = 0;

    friend bool operator==(const RoundTripReport&, const RoundTripReport&) = default;
};

/// Every probe_type x content_len, `hashes_per_cell` hashes each. The first
/// two hashes of every cell are the carry boundaries 0xFFFF and
/// 0xFFFF - content_len; the rest are pseudorandom.
RoundTripReport cookie_roundtrip_sweep(std::uint64_t seed, unsigned hashes_per_cell = 256);
RoundTripReport cookie_roundtrip_sweep_serial(std::uint64_t seed, unsigned hashes_per_cell = 256);

/// Uniformly random acknos tested against one expected hash with the SYN_SENT rule.
std::uint64_t synack_false_positives(std::uint64_t trials, std::uint16_t expected_hash, std::uint64_t seed);
std::uint64_t synack_false_positives_serial(std::uint64_t trials, std::uint16_t expected_hash, std::uint64_t seed);

/// hash_quad bucket counts (65536 buckets) over pseudorandom quads.
std::vector<std::uint64_t> hash_histogram(const HashSecret& secret, std::uint64_t quads, std::uint64_t seed);
std::vector<std::uint64_t> hash_histogram_serial(const HashSecret& secret, std::uint64_t quads, std::uint64_t seed);

/// permute(i) for every i in [0, n).
std::vector<std::uint64_t> permutation_image(std::uint64_t n, std::uint64_t seed);
std::vector<std::uint64_t> permutation_image_serial(std::uint64_t n, std::uint64_t seed);
/// True when `image` holds each value of [0, image.size()) exactly once.
bool is_bijection(const std::vector<std::uint64_t>& image);

/// Per-direction loss and endpoint retransmission budgets for the
/// single-attempt banner exchange.
struct LossModel {
    double loss_syn = 0.0;         // extra loss on our SYN only
    double loss_to_target = 0.0;   // SYN, handshake ACK+probe, RST
    double loss_from_target = 0.0; // SYN-ACK, banner
    unsigned synack_retries = 3;
    unsigned data_retries = 3;
};

/// Monte-Carlo of one-sided state maintenance: the target retransmits its
/// SYN-ACK and banner until acknowledged or out of budget; the scanner answers
/// only the first SYN-ACK copy it sees (later copies are duplicates) and
/// never retransmits. Returns how many of `targets` yield a banner.
std::uint64_t banner_coverage_oracle(std::uint64_t targets, const LossModel& m, std::uint64_t seed);
std::uint64_t banner_coverage_oracle_serial(std::uint64_t targets, const LossModel& m, std::uint64_t seed);

/// Closed form of the same model.
double banner_coverage_expected(const LossModel& m);

} // namespace cookiescan::kernels
