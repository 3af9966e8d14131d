#include "cookiescan/permute.hpp"

#include "cookiescan/mix.hpp"

#include <bit>
#include <stdexcept>

namespace cookiescan {

Permutation::Permutation(std::uint64_t n, std::uint64_t seed) : n_(n) {
    if (n == 0) throw std::invalid_argument("permutation domain must be non-empty");
    if (n > (std::uint64_t{1} << 62)) throw std::invalid_argument("permutation domain too large");
    unsigned bits = n <= 1 ? 1 : static_cast<unsigned>(std::bit_width(n - 1));
    if (bits < 2) bits = 2;
    if (bits % 2) ++bits;
    half_bits_ = bits / 2;
    half_mask_ = (std::uint64_t{1} << half_bits_) - 1;
    std::uint64_t state = seed;
    for (auto& k : round_keys_) k = splitmix64(state);
}

std::uint64_t Permutation::feistel(std::uint64_t x) const {
    std::uint64_t left = x >> half_bits_;
    std::uint64_t right = x & half_mask_;
    for (const std::uint64_t key : round_keys_) {
        const std::uint64_t f = mix64(right ^ key) & half_mask_;
        const std::uint64_t next = left ^ f;
        left = right;
        right = next;
    }
    return (left << half_bits_) | right;
}

std::uint64_t Permutation::operator()(std::uint64_t index) const {
    std::uint64_t x = index;
    do {
        x = feistel(x);
    } while (x >= n_);
    return x;
}

} // namespace cookiescan
