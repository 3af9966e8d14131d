#pragma once

#include "cookiescan/cookie.hpp"
#include "cookiescan/packet.hpp"
#include "cookiescan/permute.hpp"
#include "cookiescan/probes.hpp"
#include "cookiescan/targets.hpp"
#include "cookiescan/types.hpp"

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace cookiescan {

/// Token bucket driven by an injected clock.
class RateLimiter {
public:
    /// burst defaults to max(1, rate/100) tokens; the bucket starts with one token.
    explicit RateLimiter(double rate_pps, std::optional<double> burst = std::nullopt);

    bool try_take(Timestamp now);
    /// Earliest time at which try_take can succeed.
    Timestamp next_ready(Timestamp now) const;

    double rate() const { return rate_; }
    double burst() const { return burst_; }

private:
    void refill(Timestamp now);

    double rate_;
    double burst_;
    double tokens_ = 1.0;
    std::optional<Timestamp> last_;
};

/// Bounded multi-producer, single-consumer FIFO of reply frames. Producers
/// never block: a push into a full queue is dropped and counted.
class CallbackQueue {
public:
    static constexpr std::size_t kDefaultCapacity = std::size_t{1} << 16;

    explicit CallbackQueue(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

    bool push(Bytes frame);
    std::optional<Bytes> pop();
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t overflows() const;

private:
    mutable std::mutex mu_;
    std::deque<Bytes> q_;
    std::size_t capacity_;
    std::uint64_t overflows_ = 0;
};

struct PortRange {
    std::uint16_t lo = 32768;
    std::uint16_t hi = 61000;
    std::uint32_t size() const { return std::uint32_t{hi} - lo + 1; }
};

/// Deterministic local endpoint for a target, so every segment the target
/// sends for this scan lands on the same port.
Endpoint source_endpoint(const Endpoint& target, std::uint64_t seed, Ipv4 source_ip, PortRange range);

struct SenderConfig {
    Ipv4 source_ip{10, 0, 0, 1};
    PortRange source_ports;
    std::uint64_t seed = 0;
    std::uint32_t retries = 1;
    double inter_attempt_gap = 1.0;
    double cooldown = 10.0;
    /// Poll interval while idling in the cooldown window.
    double cooldown_tick = 0.01;
    BuildParams build;
};

struct SenderCounters {
    std::uint64_t sent_syn = 0;
    std::uint64_t sent_reply = 0;
    std::uint64_t probe_faults = 0;
};

struct Action {
    enum class Kind { Transmit, Wait, Done };
    Kind kind = Kind::Done;
    Bytes frame;
    bool is_reply = false;
    /// Callback-queue depth seen when the decision was made.
    std::size_t queue_depth = 0;
    /// For Wait: when to call next_action again.
    Timestamp until = 0.0;
};

/// The transmit actor. Replies from the callback queue always go first; new
/// SYNs come from a keyed permutation of the target space, one pass per
/// attempt, under the token bucket. After the last pass it idles for the
/// cooldown window so late responses can still be answered.
class Sender {
public:
    Sender(const TargetSpace& targets, const ProbeRegistry& probes, const HashSecret& secret, CallbackQueue& queue,
           RateLimiter limiter, SenderConfig cfg);

    Action next_action(Timestamp now);

    const SenderCounters& counters() const { return counters_; }
    bool targets_exhausted() const { return pass_ >= cfg_.retries; }
    /// SYNs one full run will send: retries x targets x probes.
    std::uint64_t planned_syns() const;

private:
    std::optional<Bytes> make_syn(std::uint64_t position);

    const TargetSpace& targets_;
    const ProbeRegistry& probes_;
    HashSecret secret_;
    CallbackQueue& queue_;
    RateLimiter limiter_;
    SenderConfig cfg_;
    Permutation perm_;
    SenderCounters counters_;

    std::uint32_t pass_ = 0;
    std::uint64_t position_ = 0;
    std::optional<Timestamp> last_pass_end_;
    std::optional<Timestamp> cooldown_start_;
    bool done_ = false;
};

} // namespace cookiescan
