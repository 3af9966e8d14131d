#pragma once

#include "cookiescan/cookie.hpp"
#include "cookiescan/types.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace cookiescan {

/// Ordered key/value fields a probe attaches to a banner event.
struct Report {
    using Value = std::variant<std::int64_t, std::string>;
    std::vector<std::pair<std::string, Value>> fields;

    void add(std::string key, Value v) { fields.emplace_back(std::move(key), std::move(v)); }
    const Value* find(std::string_view key) const;
    bool empty() const { return fields.empty(); }
};

/// A probe generates the payload piggybacked on the handshake ACK and
/// interprets the first data segment the target sends back.
///
/// make_payload must be a pure function of (target, static config): the
/// receiver regenerates it at SYN-ACK time and relies on getting the same
/// length that was encoded into the SYN cookie.
class ProbeModule {
public:
    virtual ~ProbeModule() = default;

    virtual std::string_view name() const = 0;
    virtual Bytes make_payload(const Endpoint& target) const = 0;
    virtual Report handle_response(const Endpoint& target, std::span<const std::uint8_t> banner) const = 0;
    /// Upper bound on make_payload length over all targets.
    virtual std::size_t max_payload_len() const = 0;
};

/// Port-scan-only fallback: empty payload, handshake completed with a bare ACK.
class NullProbe final : public ProbeModule {
public:
    std::string_view name() const override { return "null"; }
    Bytes make_payload(const Endpoint&) const override { return {}; }
    Report handle_response(const Endpoint&, std::span<const std::uint8_t>) const override;
    std::size_t max_payload_len() const override { return 0; }
};

class HttpGetProbe final : public ProbeModule {
public:
    static constexpr std::string_view kDefaultUserAgent = "Mozilla/5.0 (compatible; cookiescan/1.0)";

    explicit HttpGetProbe(std::string user_agent = std::string(kDefaultUserAgent), std::string path = "/");

    std::string_view name() const override { return "http-get"; }
    Bytes make_payload(const Endpoint& target) const override;
    Report handle_response(const Endpoint& target, std::span<const std::uint8_t> banner) const override;
    std::size_t max_payload_len() const override;

private:
    std::string user_agent_;
    std::string path_;
};

/// Constant user-supplied payload.
class RawHexProbe final : public ProbeModule {
public:
    /// Throws std::invalid_argument on malformed hex.
    explicit RawHexProbe(std::string_view hex);

    std::string_view name() const override { return "raw-hex"; }
    Bytes make_payload(const Endpoint&) const override { return payload_; }
    Report handle_response(const Endpoint&, std::span<const std::uint8_t> banner) const override;
    std::size_t max_payload_len() const override { return payload_.size(); }

private:
    Bytes payload_;
};

/// Parses an HTTP response head. Returns protocol=http with status (and
/// server when present), or protocol=unknown.
Report classify_http_banner(std::span<const std::uint8_t> banner);

/// Sixteen slots addressed by the cookie's probe_type field.
class ProbeRegistry {
public:
    /// Returns the slot index. Throws std::length_error when all 16 slots are
    /// taken or the probe can exceed 4095 payload bytes, std::logic_error once frozen.
    std::uint8_t add(std::shared_ptr<const ProbeModule> probe);

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    const ProbeModule* get(std::uint8_t probe_type) const {
        return probe_type < slots_.size() ? slots_[probe_type].get() : nullptr;
    }
    std::size_t size() const { return count_; }
    std::string_view name_of(std::uint8_t probe_type) const;

private:
    std::array<std::shared_ptr<const ProbeModule>, kMaxProbeTypes> slots_{};
    std::size_t count_ = 0;
    bool frozen_ = false;
};

/// Constructs a built-in probe from its name and key=value arguments.
/// Known names: null, http-get (user_agent, path), raw-hex (hex).
/// Throws std::invalid_argument for unknown names or arguments.
std::shared_ptr<const ProbeModule> make_builtin_probe(std::string_view name,
                                                      const std::map<std::string, std::string>& args);

/// Parses "name" or "name:key=value;key=value".
std::pair<std::string, std::map<std::string, std::string>> parse_probe_spec(std::string_view spec);

} // namespace cookiescan
