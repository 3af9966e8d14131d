#pragma once

#include "cookiescan/types.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testsupport {

inline std::string data_path(const std::string& rel) { return std::string(COOKIESCAN_TEST_DATA) + "/" + rel; }

inline cookiescan::Bytes from_hex(const std::string& hex) {
    cookiescan::Bytes out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
    return out;
}

inline cookiescan::Bytes bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

inline std::vector<std::vector<std::string>> read_table(const std::string& rel) {
    std::ifstream in(data_path(rel));
    if (!in) throw std::runtime_error("missing fixture " + rel);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<std::string> cols;
        for (std::string c; ls >> c;) cols.push_back(c);
        rows.push_back(std::move(cols));
    }
    return rows;
}

/// Upper critical value of chi-square with `df` degrees of freedom
/// (Wilson-Hilferty), for the standard normal quantile `z`.
inline double chi_square_critical(double df, double z) {
    const double a = 2.0 / (9.0 * df);
    return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

/// RFC 1071 verification written independently of the library: a valid
/// header or pseudo-header+segment sums to 0xFFFF.
inline bool rfc1071_ok(const cookiescan::Bytes& frame) {
    auto fold = [](std::uint64_t s) {
        while (s >> 16) s = (s & 0xFFFF) + (s >> 16);
        return s;
    };
    auto sum = [](const std::uint8_t* p, std::size_t n) {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i + 1 < n; i += 2) s += (std::uint64_t{p[i]} << 8) | p[i + 1];
        if (n % 2) s += std::uint64_t{p[n - 1]} << 8;
        return s;
    };
    const std::size_t ihl = (frame[0] & 0x0F) * 4u;
    if (fold(sum(frame.data(), ihl)) != 0xFFFF) return false;
    const std::size_t tcp_len = frame.size() - ihl;
    std::uint64_t s = sum(frame.data() + 12, 8) + 6 + tcp_len;
    s += sum(frame.data() + ihl, tcp_len);
    return fold(s) == 0xFFFF;
}

} // namespace testsupport
