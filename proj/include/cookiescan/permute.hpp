#pragma once

#include <cstdint>

namespace cookiescan {

/// Keyed bijection on [0, n).
///
/// Balanced Feistel network over the smallest even bit width whose domain
/// covers n, with cycle-walking back into range. The domain is < 4n, so the
/// expected walk length is below 4.
class Permutation {
public:
    static constexpr int kRounds = 6;

    Permutation(std::uint64_t n, std::uint64_t seed);

    /// Precondition: index < size().
    std::uint64_t operator()(std::uint64_t index) const;

    std::uint64_t size() const { return n_; }

private:
    std::uint64_t feistel(std::uint64_t x) const;

    std::uint64_t n_;
    unsigned half_bits_;
    std::uint64_t half_mask_;
    std::uint64_t round_keys_[kRounds];
};

inline std::uint64_t permute(std::uint64_t index, std::uint64_t seed, std::uint64_t n) {
    return Permutation(n, seed)(index);
}

} // namespace cookiescan
