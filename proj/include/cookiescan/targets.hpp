#pragma once

#include "cookiescan/types.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <string_view>
#include <vector>

namespace cookiescan {

struct Cidr {
    Ipv4 base;
    std::uint8_t prefix = 32;

    Ipv4 first() const { return base; }
    Ipv4 last() const;
    bool contains(Ipv4 a) const { return a >= first() && a <= last(); }

    /// Accepts "a.b.c.d" or "a.b.c.d/n"; host bits are masked off.
    static std::optional<Cidr> parse(std::string_view text);
};

/// Inclusive address interval.
struct AddressRange {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
    std::uint64_t size() const { return std::uint64_t{hi} - lo + 1; }
};

/// Sorted, disjoint union of address ranges.
class AddressSet {
public:
    AddressSet() = default;
    explicit AddressSet(const std::vector<Cidr>& blocks);

    void add(const Cidr& c);
    void subtract(const AddressSet& other);
    bool contains(Ipv4 a) const;

    std::uint64_t size() const { return total_; }
    /// The i-th address in ascending order. Precondition: i < size().
    Ipv4 at(std::uint64_t i) const;
    const std::vector<AddressRange>& ranges() const { return ranges_; }

private:
    void normalize();

    std::vector<AddressRange> ranges_;
    std::vector<std::uint64_t> prefix_; // addresses before each range
    std::uint64_t total_ = 0;
};

/// Reads one CIDR per line; '#' starts a comment, blank lines ignored.
/// Throws std::invalid_argument naming the offending line.
std::vector<Cidr> read_cidr_list(std::istream& in);

/// Parses "80,443,8000-8010". Throws std::invalid_argument.
std::vector<std::uint16_t> parse_port_list(std::string_view text);

/// Parses "a,b" separated CIDRs. Throws std::invalid_argument.
std::vector<Cidr> parse_cidr_list(std::string_view text);

/// (address, port) pairs indexed 0..size()-1.
class TargetSpace {
public:
    TargetSpace(AddressSet addresses, std::vector<std::uint16_t> ports);

    std::uint64_t size() const { return addresses_.size() * ports_.size(); }
    Endpoint at(std::uint64_t index) const;
    bool contains(const Endpoint& e) const;

    const AddressSet& addresses() const { return addresses_; }
    const std::vector<std::uint16_t>& ports() const { return ports_; }

private:
    AddressSet addresses_;
    std::vector<std::uint16_t> ports_;
};

} // namespace cookiescan
