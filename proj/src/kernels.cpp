#include "cookiescan/kernels.hpp"

#include "cookiescan/mix.hpp"
#include "cookiescan/permute.hpp"

#include <cmath>

namespace cookiescan::kernels {

namespace {

constexpr std::uint64_t kCells = std::uint64_t{kMaxProbeTypes} * (kMaxContentLen + 1);

std::uint64_t stream(std::uint64_t seed, std::uint64_t index) { return mix64(seed ^ mix64(index)); }

void roundtrip_cell(std::uint64_t cell, std::uint64_t seed, unsigned per_cell, RoundTripReport& r) {
    const auto type = static_cast<std::uint8_t>(cell >> kContentLenBits);
    const auto len = static_cast<std::uint16_t>(cell & kMaxContentLen);
    for (unsigned k = 0; k < per_cell; ++k) {
        std::uint16_t hash;
        if (k == 0)
            hash = 0xFFFF;
        else if (k == 1)
            hash = static_cast<std::uint16_t>(0xFFFF - len);
        else
            hash = static_cast<std::uint16_t>(stream(seed, cell * per_cell + k));

        const Cookie c{type, len, hash};
        const std::uint32_t word = encode(c);
        const std::uint32_t ackno = word + len + 1u;
        ++r.checked;
        if (std::uint32_t{hash} + len + 1u > 0xFFFF) ++r.carry_cases;
        if (ackno < word) ++r.wrap_cases;
        const auto got = classify_transmit_hash(ackno, hash);
        if (!got || !(*got == c)) ++r.transmit_failures;
        if (len > 0 && classify_synack_hash(ackno, hash)) ++r.synack_collisions;
    }
}

bool oracle_target(std::uint64_t index, const LossModel& m, std::uint64_t seed) {
    std::uint64_t state = stream(seed, index);
    auto lost = [&](double p) { return p > 0.0 && unit_interval(splitmix64(state)) < p; };

    if (lost(m.loss_syn) || lost(m.loss_to_target)) return false;
    bool synack_seen = false;
    for (unsigned i = 0; i <= m.synack_retries && !synack_seen; ++i) synack_seen = !lost(m.loss_from_target);
    if (!synack_seen) return false;
    // Only the first SYN-ACK copy is answered; if the probe is lost the
    // target's retransmitted SYN-ACKs fall inside the dedup horizon.
    if (lost(m.loss_to_target)) return false;
    for (unsigned i = 0; i <= m.data_retries; ++i)
        if (!lost(m.loss_from_target)) return true;
    return false;
}

} // namespace

RoundTripReport cookie_roundtrip_sweep(std::uint64_t seed, unsigned hashes_per_cell) {
    std::uint64_t checked = 0, failures = 0, collisions = 0, carries = 0, wraps = 0;
#pragma omp parallel for schedule(static) reduction(+ : checked, failures, collisions, carries, wraps)
    for (std::int64_t cell = 0; cell < static_cast<std::int64_t>(kCells); ++cell) {
        RoundTripReport r;
        roundtrip_cell(static_cast<std::uint64_t>(cell), seed, hashes_per_cell, r);
        checked += r.checked;
        failures += r.transmit_failures;
        collisions += r.synack_collisions;
        carries += r.carry_cases;
        wraps += r.wrap_cases;
    }
    return {checked, failures, collisions, carries, wraps};
}

RoundTripReport cookie_roundtrip_sweep_serial(std::uint64_t seed, unsigned hashes_per_cell) {
    RoundTripReport r;
    for (std::uint64_t cell = 0; cell < kCells; ++cell) roundtrip_cell(cell, seed, hashes_per_cell, r);
    return r;
}

std::uint64_t synack_false_positives(std::uint64_t trials, std::uint16_t expected_hash, std::uint64_t seed) {
    std::uint64_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(trials); ++i) {
        const auto ackno = static_cast<std::uint32_t>(stream(seed, static_cast<std::uint64_t>(i)));
        hits += classify_synack_hash(ackno, expected_hash).has_value();
    }
    return hits;
}

std::uint64_t synack_false_positives_serial(std::uint64_t trials, std::uint16_t expected_hash, std::uint64_t seed) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto ackno = static_cast<std::uint32_t>(stream(seed, i));
        hits += classify_synack_hash(ackno, expected_hash).has_value();
    }
    return hits;
}

namespace {

QuadKey random_quad(std::uint64_t seed, std::uint64_t i) {
    const std::uint64_t a = stream(seed, 2 * i);
    const std::uint64_t b = stream(seed, 2 * i + 1);
    return {Ipv4{static_cast<std::uint32_t>(a)}, static_cast<std::uint16_t>(a >> 32),
            Ipv4{static_cast<std::uint32_t>(b)}, static_cast<std::uint16_t>(b >> 32)};
}

} // namespace

std::vector<std::uint64_t> hash_histogram(const HashSecret& secret, std::uint64_t quads, std::uint64_t seed) {
    std::vector<std::uint64_t> total(1u << 16, 0);
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(1u << 16, 0);
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(quads); ++i)
            ++local[hash_quad(random_quad(seed, static_cast<std::uint64_t>(i)), secret)];
#pragma omp critical
        for (std::size_t b = 0; b < local.size(); ++b) total[b] += local[b];
    }
    return total;
}

std::vector<std::uint64_t> hash_histogram_serial(const HashSecret& secret, std::uint64_t quads, std::uint64_t seed) {
    std::vector<std::uint64_t> total(1u << 16, 0);
    for (std::uint64_t i = 0; i < quads; ++i) ++total[hash_quad(random_quad(seed, i), secret)];
    return total;
}

std::vector<std::uint64_t> permutation_image(std::uint64_t n, std::uint64_t seed) {
    const Permutation perm(n, seed);
    std::vector<std::uint64_t> out(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        out[static_cast<std::size_t>(i)] = perm(static_cast<std::uint64_t>(i));
    return out;
}

std::vector<std::uint64_t> permutation_image_serial(std::uint64_t n, std::uint64_t seed) {
    const Permutation perm(n, seed);
    std::vector<std::uint64_t> out(n);
    for (std::uint64_t i = 0; i < n; ++i) out[i] = perm(i);
    return out;
}

bool is_bijection(const std::vector<std::uint64_t>& image) {
    std::vector<bool> seen(image.size(), false);
    for (const auto v : image) {
        if (v >= image.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

std::uint64_t banner_coverage_oracle(std::uint64_t targets, const LossModel& m, std::uint64_t seed) {
    std::uint64_t ok = 0;
#pragma omp parallel for schedule(static) reduction(+ : ok)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(targets); ++i)
        ok += oracle_target(static_cast<std::uint64_t>(i), m, seed);
    return ok;
}

std::uint64_t banner_coverage_oracle_serial(std::uint64_t targets, const LossModel& m, std::uint64_t seed) {
    std::uint64_t ok = 0;
    for (std::uint64_t i = 0; i < targets; ++i) ok += oracle_target(i, m, seed);
    return ok;
}

double banner_coverage_expected(const LossModel& m) {
    const double syn = (1.0 - m.loss_syn) * (1.0 - m.loss_to_target);
    const double synack = 1.0 - std::pow(m.loss_from_target, m.synack_retries + 1);
    const double probe = 1.0 - m.loss_to_target;
    const double banner = 1.0 - std::pow(m.loss_from_target, m.data_retries + 1);
    return syn * synack * probe * banner;
}

} // namespace cookiescan::kernels
