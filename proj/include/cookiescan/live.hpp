#pragma once

// Raw-socket packet I/O for scanning real networks.
//
// The kernel owns no socket for our source ports, so it answers every
// SYN-ACK with its own RST and tears the target's half of the connection
// down before our piggybacked ACK arrives. Drop those RSTs on the host, e.g.
//
//   iptables -A OUTPUT -p tcp --sport 32768:61000 --tcp-flags RST RST -m mark ! --mark 0x5a5a -j DROP
//
// Frames sent through this adapter carry SO_MARK 0x5a5a so our own RSTs pass.

#include "cookiescan/types.hpp"

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace cookiescan {

inline constexpr const char* kLiveOptInEnv = "COOKIESCAN_LIVE_ACK";
inline constexpr int kLiveSocketMark = 0x5a5a;

class LiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// True when the opt-in environment variable is set to "1".
bool live_opt_in_from_env();

class LiveTransport {
public:
    struct Options {
        std::string interface;
        /// Must be true; the adapter refuses to construct otherwise.
        bool opt_in = false;
    };

    /// Throws LiveError (with a remediation hint) when not opted in or when
    /// raw sockets cannot be opened.
    explicit LiveTransport(const Options& opts);
    ~LiveTransport();
    LiveTransport(const LiveTransport&) = delete;
    LiveTransport& operator=(const LiveTransport&) = delete;

    /// Sends one IPv4 datagram with our own header.
    void send(std::span<const std::uint8_t> frame);
    /// Next inbound IPv4 datagram on the interface, or nullopt after timeout.
    std::optional<Bytes> receive(int timeout_ms);
    /// Seconds since construction on a steady clock.
    Timestamp now() const;

    std::uint64_t send_errors() const { return send_errors_; }

private:
    int send_fd_ = -1;
    int recv_fd_ = -1;
    std::chrono::steady_clock::time_point epoch_;
    std::uint64_t send_errors_ = 0;
};

} // namespace cookiescan
