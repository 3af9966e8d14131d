#include "cookiescan/sender.hpp"

#include "cookiescan/mix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cookiescan {

RateLimiter::RateLimiter(double rate_pps, std::optional<double> burst) : rate_(rate_pps) {
    if (!(rate_pps > 0.0)) throw std::invalid_argument("rate must be positive");
    burst_ = burst.value_or(std::max(1.0, rate_pps / 100.0));
    if (burst_ < 1.0) throw std::invalid_argument("burst must allow at least one packet");
}

void RateLimiter::refill(Timestamp now) {
    if (last_ && now > *last_) tokens_ = std::min(burst_, tokens_ + (now - *last_) * rate_);
    if (!last_ || now > *last_) last_ = now;
}

namespace {
// Refill arithmetic accumulates rounding error; a bucket this close to one
// token at the time next_ready promised must not stall the caller.
constexpr double kTokenSlack = 1e-9;
} // namespace

bool RateLimiter::try_take(Timestamp now) {
    refill(now);
    if (tokens_ + kTokenSlack < 1.0) return false;
    tokens_ = std::max(0.0, tokens_ - 1.0);
    return true;
}

Timestamp RateLimiter::next_ready(Timestamp now) const {
    double tokens = tokens_;
    if (last_ && now > *last_) tokens = std::min(burst_, tokens + (now - *last_) * rate_);
    if (tokens + kTokenSlack >= 1.0) return now;
    return std::max(now + (1.0 - tokens) / rate_, std::nextafter(now, std::numeric_limits<double>::infinity()));
}

bool CallbackQueue::push(Bytes frame) {
    std::lock_guard lock(mu_);
    if (q_.size() >= capacity_) {
        ++overflows_;
        return false;
    }
    q_.push_back(std::move(frame));
    return true;
}

std::optional<Bytes> CallbackQueue::pop() {
    std::lock_guard lock(mu_);
    if (q_.empty()) return std::nullopt;
    Bytes b = std::move(q_.front());
    q_.pop_front();
    return b;
}

std::size_t CallbackQueue::size() const {
    std::lock_guard lock(mu_);
    return q_.size();
}

std::uint64_t CallbackQueue::overflows() const {
    std::lock_guard lock(mu_);
    return overflows_;
}

Endpoint source_endpoint(const Endpoint& target, std::uint64_t seed, Ipv4 source_ip, PortRange range) {
    const std::uint64_t h = mix64(seed ^ mix64((std::uint64_t{target.ip.value} << 16) | target.port));
    return {source_ip, static_cast<std::uint16_t>(range.lo + h % range.size())};
}

Sender::Sender(const TargetSpace& targets, const ProbeRegistry& probes, const HashSecret& secret,
               CallbackQueue& queue, RateLimiter limiter, SenderConfig cfg)
    : targets_(targets),
      probes_(probes),
      secret_(secret),
      queue_(queue),
      limiter_(limiter),
      cfg_(cfg),
      perm_(std::max<std::uint64_t>(targets.size(), 1), cfg.seed) {
    if (cfg_.retries == 0) throw std::invalid_argument("retries must be at least 1");
    if (probes_.size() == 0) throw std::invalid_argument("no probe registered");
    if (cfg_.source_ports.lo > cfg_.source_ports.hi) throw std::invalid_argument("empty source port range");
    if (targets_.size() == 0) pass_ = cfg_.retries;
}

std::uint64_t Sender::planned_syns() const {
    return std::uint64_t{cfg_.retries} * targets_.size() * probes_.size();
}

std::optional<Bytes> Sender::make_syn(std::uint64_t position) {
    const std::uint64_t n_probes = probes_.size();
    const auto probe_type = static_cast<std::uint8_t>(position % n_probes);
    const Endpoint target = targets_.at(perm_(position / n_probes));
    const Endpoint local = source_endpoint(target, cfg_.seed ^ (std::uint64_t{probe_type} << 56), cfg_.source_ip,
                                           cfg_.source_ports);
    const QuadKey quad{local.ip, local.port, target.ip, target.port};

    const std::size_t len = probes_.get(probe_type)->make_payload(target).size();
    if (len > kMaxContentLen) {
        ++counters_.probe_faults;
        return std::nullopt;
    }
    const Cookie c{probe_type, static_cast<std::uint16_t>(len), hash_quad(quad, secret_)};
    return build_syn(quad, encode(c), cfg_.build);
}

Action Sender::next_action(Timestamp now) {
    Action a;
    if (done_) return a;
    a.queue_depth = queue_.size();

    if (a.queue_depth > 0) {
        if (!limiter_.try_take(now)) {
            a.kind = Action::Kind::Wait;
            a.until = limiter_.next_ready(now);
            return a;
        }
        a.kind = Action::Kind::Transmit;
        a.frame = *queue_.pop();
        a.is_reply = true;
        ++counters_.sent_reply;
        return a;
    }

    const std::uint64_t per_pass = targets_.size() * probes_.size();
    while (pass_ < cfg_.retries) {
        // Attempt k+1 of any target starts at least one gap after attempt k of it.
        if (position_ == 0 && last_pass_end_ && now < *last_pass_end_ + cfg_.inter_attempt_gap) {
            a.kind = Action::Kind::Wait;
            a.until = *last_pass_end_ + cfg_.inter_attempt_gap;
            return a;
        }
        if (!limiter_.try_take(now)) {
            a.kind = Action::Kind::Wait;
            a.until = limiter_.next_ready(now);
            return a;
        }
        auto syn = make_syn(position_);
        if (++position_ == per_pass) {
            position_ = 0;
            ++pass_;
            last_pass_end_ = now;
        }
        if (!syn) continue;
        a.kind = Action::Kind::Transmit;
        a.frame = std::move(*syn);
        ++counters_.sent_syn;
        return a;
    }

    if (!cooldown_start_) cooldown_start_ = now;
    const Timestamp end = *cooldown_start_ + cfg_.cooldown;
    if (now >= end) {
        done_ = true;
        return a;
    }
    a.kind = Action::Kind::Wait;
    a.until = std::min(end, now + cfg_.cooldown_tick);
    return a;
}

} // namespace cookiescan
