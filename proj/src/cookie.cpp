#include "cookiescan/cookie.hpp"

#include <sodium.h>

#include <random>
#include <stdexcept>

namespace cookiescan {

namespace {

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

void put_be32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 24);
    p[1] = static_cast<std::uint8_t>(v >> 16);
    p[2] = static_cast<std::uint8_t>(v >> 8);
    p[3] = static_cast<std::uint8_t>(v);
}

} // namespace

HashSecret HashSecret::random() {
    ensure_sodium();
    std::array<std::uint8_t, kSize> key{};
    randombytes_buf(key.data(), key.size());
    return HashSecret{key};
}

HashSecret HashSecret::from_seed(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x636F6F6Bu};
    std::mt19937_64 gen(seq);
    std::array<std::uint8_t, kSize> key{};
    for (std::size_t i = 0; i < kSize; i += 8) {
        const std::uint64_t w = gen();
        for (std::size_t b = 0; b < 8; ++b) key[i + b] = static_cast<std::uint8_t>(w >> (8 * b));
    }
    return HashSecret{key};
}

std::uint16_t hash_quad(const QuadKey& sent, const HashSecret& secret) {
    static_assert(crypto_shorthash_KEYBYTES == HashSecret::kSize);
    std::uint8_t msg[12];
    put_be32(msg, sent.src_ip.value);
    msg[4] = static_cast<std::uint8_t>(sent.src_port >> 8);
    msg[5] = static_cast<std::uint8_t>(sent.src_port);
    put_be32(msg + 6, sent.dst_ip.value);
    msg[10] = static_cast<std::uint8_t>(sent.dst_port >> 8);
    msg[11] = static_cast<std::uint8_t>(sent.dst_port);

    unsigned char out[crypto_shorthash_BYTES];
    crypto_shorthash(out, msg, sizeof msg, secret.bytes().data());
    return static_cast<std::uint16_t>(out[0] | (out[1] << 8));
}

std::uint32_t encode(const Cookie& c) {
    if (!cookie_in_range(c.probe_type, c.content_len))
        throw std::out_of_range("cookie field out of range: probe_type=" + std::to_string(c.probe_type) +
                                " content_len=" + std::to_string(c.content_len));
    return (std::uint32_t{c.probe_type} << 28) | (std::uint32_t{c.content_len} << 16) | c.conn_hash;
}

std::optional<Cookie> classify_synack(std::uint32_t ackno, const QuadKey& reply, const HashSecret& secret) {
    return classify_synack_hash(ackno, hash_quad(reply.swapped(), secret));
}

std::optional<Cookie> classify_transmit(std::uint32_t ackno, const QuadKey& reply, const HashSecret& secret) {
    return classify_transmit_hash(ackno, hash_quad(reply.swapped(), secret));
}

} // namespace cookiescan
