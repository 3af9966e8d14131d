#include "cookiescan/engine.hpp"

#include <algorithm>

namespace cookiescan {

using namespace tcp_flags;

namespace {

constexpr std::uint8_t kFlagMask = kFin | kSyn | kRst | kPsh | kAck;

bool allowlisted_data_flags(std::uint8_t flags) {
    const std::uint8_t f = flags & kFlagMask;
    return f == kAck || f == (kPsh | kAck) || f == (kFin | kPsh | kAck);
}

} // namespace

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Open: return "open";
    case EventKind::OpenZeroWindow: return "open-zero-window";
    case EventKind::Closed: return "closed";
    case EventKind::Banner: return "banner";
    case EventKind::Unsolicited: return "unsolicited";
    }
    return "unsolicited";
}

Engine::Engine(const ProbeRegistry& probes, const HashSecret& secret, DedupWindow dedup, EngineConfig cfg)
    : probes_(probes), secret_(secret), dedup_(std::move(dedup)), cfg_(cfg) {}

Branch Engine::handle_packet(const PacketView& pv, std::vector<ScanEvent>& events, std::vector<Reply>& replies) {
    ++counters_.handled;
    const std::uint8_t f = pv.flags & kFlagMask;

    if (f & kRst) {
        const auto c = classify_synack(pv.ackno, pv.quad, secret_);
        if (!c || !probes_.get(c->probe_type)) return unsolicited(pv, events);
        const DedupKey key{pv.quad.src_ip, pv.quad.src_port, DedupClass::Closed, c->probe_type};
        if (dedup_.check_insert(key, pv.ts) == DedupWindow::Result::Duplicate) {
            ++counters_.dedup_drops;
            return Branch::Duplicate;
        }
        ++counters_.closed;
        events.push_back({EventKind::Closed, pv.quad.swapped(), c->probe_type, {}, std::nullopt, pv.ts});
        return Branch::Closed;
    }

    if (f == (kSyn | kAck)) {
        const auto c = classify_synack(pv.ackno, pv.quad, secret_);
        if (!c || !probes_.get(c->probe_type)) return unsolicited(pv, events);
        return on_synack(pv, *c, pv.ackno - 1u, events, replies);
    }

    if (!pv.payload.empty() && allowlisted_data_flags(f)) {
        const auto c = classify_transmit(pv.ackno, pv.quad, secret_);
        if (!c || !probes_.get(c->probe_type)) return unsolicited(pv, events);
        return on_data(pv, *c, pv.ackno - c->content_len - 1u, events, replies);
    }

    if (pv.payload.empty() && f == kAck) {
        ++counters_.bare_acks;
        return Branch::BareAck;
    }
    return unsolicited(pv, events);
}

Branch Engine::on_synack(const PacketView& pv, const Cookie& c, std::uint32_t cookie32,
                         std::vector<ScanEvent>& events, std::vector<Reply>& replies) {
    const QuadKey ours = pv.quad.swapped();
    const DedupKey key{pv.quad.src_ip, pv.quad.src_port, DedupClass::SynAck, c.probe_type};
    if (dedup_.check_insert(key, pv.ts) == DedupWindow::Result::Duplicate) {
        ++counters_.dedup_drops;
        return Branch::Duplicate;
    }

    if (pv.window == 0) {
        // Open but refusing data: close it without ever sending the probe.
        ++counters_.zero_window;
        events.push_back({EventKind::OpenZeroWindow, ours, c.probe_type, {}, std::nullopt, pv.ts});
        replies.push_back({build_rst(ours, cookie32 + 1u, cfg_.build.ttl)});
        return Branch::ZeroWindow;
    }

    // The payload was never stored; regenerate it and check it still fits the cookie.
    const Bytes payload = probes_.get(c.probe_type)->make_payload(ours.dst());
    if (payload.size() != c.content_len) {
        ++counters_.probe_faults;
        return Branch::Fault;
    }
    ++counters_.open;
    events.push_back({EventKind::Open, ours, c.probe_type, {}, std::nullopt, pv.ts});
    replies.push_back({build_ack_with_payload(ours, cookie32, pv.seqno, payload, cfg_.build)});
    return Branch::Open;
}

Branch Engine::on_data(const PacketView& pv, const Cookie& c, std::uint32_t cookie32, std::vector<ScanEvent>& events,
                       std::vector<Reply>& replies) {
    const QuadKey ours = pv.quad.swapped();
    // Our probe went out when the SYN-ACK entry was inserted; once that entry
    // has aged out there is nothing left to vouch for this segment.
    if (!dedup_.contains({pv.quad.src_ip, pv.quad.src_port, DedupClass::SynAck, c.probe_type}, pv.ts)) {
        ++counters_.late_data;
        return Branch::Late;
    }
    const DedupKey key{pv.quad.src_ip, pv.quad.src_port, DedupClass::Banner, c.probe_type};
    if (dedup_.check_insert(key, pv.ts) == DedupWindow::Result::Duplicate) {
        ++counters_.dedup_drops;
        return Branch::Duplicate;
    }
    ++counters_.banners;
    const std::size_t n = std::min(pv.payload.size(), cfg_.banner_cap);
    const auto banner = pv.payload.first(n);
    ScanEvent ev{EventKind::Banner, ours, c.probe_type, Bytes(banner.begin(), banner.end()), std::nullopt, pv.ts};
    ev.report = probes_.get(c.probe_type)->handle_response(ours.dst(), banner);
    events.push_back(std::move(ev));
    replies.push_back({build_rst(ours, cookie32 + c.content_len + 1u, cfg_.build.ttl)});
    return Branch::Banner;
}

Branch Engine::unsolicited(const PacketView& pv, std::vector<ScanEvent>& events) {
    ++counters_.unsolicited;
    if (cfg_.report_unsolicited)
        events.push_back({EventKind::Unsolicited, pv.quad.swapped(), 0, {}, std::nullopt, pv.ts});
    return Branch::Unsolicited;
}

} // namespace cookiescan
