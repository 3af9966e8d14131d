#include "cookiescan/targets.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>
#include <string>

namespace cookiescan {

namespace {

std::string_view strip(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename F>
void for_each_token(std::string_view text, char sep, F&& f) {
    while (true) {
        const auto pos = text.find(sep);
        const auto tok = strip(text.substr(0, pos));
        if (!tok.empty()) f(tok);
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
}

std::optional<unsigned> parse_uint(std::string_view s) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

} // namespace

Ipv4 Cidr::last() const {
    const std::uint32_t host = prefix >= 32 ? 0u : (0xFFFFFFFFu >> prefix);
    return Ipv4{base.value | host};
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
    text = strip(text);
    const auto slash = text.find('/');
    const auto addr = Ipv4::parse(text.substr(0, slash));
    if (!addr) return std::nullopt;
    unsigned prefix = 32;
    if (slash != std::string_view::npos) {
        const auto p = parse_uint(text.substr(slash + 1));
        if (!p || *p > 32) return std::nullopt;
        prefix = *p;
    }
    const std::uint32_t mask = prefix == 0 ? 0u : (0xFFFFFFFFu << (32 - prefix));
    return Cidr{Ipv4{addr->value & mask}, static_cast<std::uint8_t>(prefix)};
}

AddressSet::AddressSet(const std::vector<Cidr>& blocks) {
    for (const auto& c : blocks) ranges_.push_back({c.first().value, c.last().value});
    normalize();
}

void AddressSet::add(const Cidr& c) {
    ranges_.push_back({c.first().value, c.last().value});
    normalize();
}

void AddressSet::normalize() {
    std::sort(ranges_.begin(), ranges_.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
    std::vector<AddressRange> merged;
    for (const auto& r : ranges_) {
        if (!merged.empty() && std::uint64_t{r.lo} <= std::uint64_t{merged.back().hi} + 1)
            merged.back().hi = std::max(merged.back().hi, r.hi);
        else
            merged.push_back(r);
    }
    ranges_ = std::move(merged);
    prefix_.clear();
    total_ = 0;
    for (const auto& r : ranges_) {
        prefix_.push_back(total_);
        total_ += r.size();
    }
}

void AddressSet::subtract(const AddressSet& other) {
    std::vector<AddressRange> out;
    for (auto r : ranges_) {
        std::uint64_t lo = r.lo;
        const std::uint64_t hi = r.hi;
        for (const auto& x : other.ranges_) {
            if (x.hi < lo || x.lo > hi) continue;
            if (x.lo > lo) out.push_back({static_cast<std::uint32_t>(lo), x.lo - 1});
            lo = std::uint64_t{x.hi} + 1;
            if (lo > hi) break;
        }
        if (lo <= hi) out.push_back({static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)});
    }
    ranges_ = std::move(out);
    normalize();
}

bool AddressSet::contains(Ipv4 a) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), a.value, [](std::uint32_t v, const AddressRange& r) {
        return v < r.lo;
    });
    if (it == ranges_.begin()) return false;
    --it;
    return a.value <= it->hi;
}

Ipv4 AddressSet::at(std::uint64_t i) const {
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), i);
    const std::size_t r = static_cast<std::size_t>(it - prefix_.begin()) - 1;
    return Ipv4{static_cast<std::uint32_t>(ranges_[r].lo + (i - prefix_[r]))};
}

std::vector<Cidr> read_cidr_list(std::istream& in) {
    std::vector<Cidr> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = strip(s);
        if (s.empty()) continue;
        const auto c = Cidr::parse(s);
        if (!c) throw std::invalid_argument("line " + std::to_string(lineno) + ": invalid CIDR '" + std::string(s) + "'");
        out.push_back(*c);
    }
    return out;
}

std::vector<std::uint16_t> parse_port_list(std::string_view text) {
    std::vector<std::uint16_t> ports;
    for_each_token(text, ',', [&](std::string_view tok) {
        const auto dash = tok.find('-');
        const auto lo = parse_uint(strip(tok.substr(0, dash)));
        const auto hi = dash == std::string_view::npos ? lo : parse_uint(strip(tok.substr(dash + 1)));
        if (!lo || !hi || *lo == 0 || *hi > 65535 || *lo > *hi)
            throw std::invalid_argument("invalid port or range '" + std::string(tok) + "'");
        for (unsigned p = *lo; p <= *hi; ++p) ports.push_back(static_cast<std::uint16_t>(p));
    });
    std::sort(ports.begin(), ports.end());
    ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
    if (ports.empty()) throw std::invalid_argument("empty port list");
    return ports;
}

std::vector<Cidr> parse_cidr_list(std::string_view text) {
    std::vector<Cidr> out;
    for_each_token(text, ',', [&](std::string_view tok) {
        const auto c = Cidr::parse(tok);
        if (!c) throw std::invalid_argument("invalid CIDR '" + std::string(tok) + "'");
        out.push_back(*c);
    });
    return out;
}

TargetSpace::TargetSpace(AddressSet addresses, std::vector<std::uint16_t> ports)
    : addresses_(std::move(addresses)), ports_(std::move(ports)) {
    std::sort(ports_.begin(), ports_.end());
    ports_.erase(std::unique(ports_.begin(), ports_.end()), ports_.end());
}

Endpoint TargetSpace::at(std::uint64_t index) const {
    const std::uint64_t n_addr = addresses_.size();
    return {addresses_.at(index % n_addr), ports_[static_cast<std::size_t>(index / n_addr)]};
}

bool TargetSpace::contains(const Endpoint& e) const {
    return addresses_.contains(e.ip) && std::binary_search(ports_.begin(), ports_.end(), e.port);
}

} // namespace cookiescan
