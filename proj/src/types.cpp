#include "cookiescan/types.hpp"

#include <charconv>

namespace cookiescan {

std::string Ipv4::to_string() const {
    std::string s;
    s.reserve(15);
    for (int shift = 24; shift >= 0; shift -= 8) {
        s += std::to_string((value >> shift) & 0xFF);
        if (shift) s += '.';
    }
    return s;
}

std::optional<Ipv4> Ipv4::parse(std::string_view dotted) {
    std::uint32_t out = 0;
    const char* p = dotted.data();
    const char* end = p + dotted.size();
    for (int i = 0; i < 4; ++i) {
        if (i > 0) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
        if (p == end || *p < '0' || *p > '9') return std::nullopt;
        unsigned octet = 0;
        auto [next, ec] = std::from_chars(p, end, octet);
        if (ec != std::errc{} || octet > 255 || next - p > 3) return std::nullopt;
        out = (out << 8) | octet;
        p = next;
    }
    if (p != end) return std::nullopt;
    return Ipv4{out};
}

} // namespace cookiescan
