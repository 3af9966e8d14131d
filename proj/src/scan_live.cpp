#include "cookiescan/live.hpp"
#include "cookiescan/scan.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace cookiescan {

namespace {

/// Receiver -> sink hand-off.
class EventChannel {
public:
    void push(ScanEvent e) {
        {
            std::lock_guard lock(mu_);
            q_.push_back(std::move(e));
        }
        cv_.notify_one();
    }
    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }
    std::optional<ScanEvent> pop() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !q_.empty() || closed_; });
        std::optional<ScanEvent> e;
        if (!q_.empty()) {
            e.emplace(std::move(q_.front()));
            q_.pop_front();
        }
        return e;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<ScanEvent> q_;
    bool closed_ = false;
};

} // namespace

RunResult run_live(const ScanConfig& cfg, NdjsonSink& sink) {
    const ProbeRegistry probes = build_registry(cfg);
    const TargetSpace space = build_target_space(cfg);
    const AddressSet excluded(cfg.exclude);
    const HashSecret secret = cfg.seed ? HashSecret::from_seed(*cfg.seed) : HashSecret::random();
    const std::uint64_t seed = cfg.seed.value_or(0x636F6F6B69657363ULL);

    LiveTransport transport({cfg.interface, cfg.live_opt_in});

    CallbackQueue queue(cfg.callback_capacity);
    Sender sender(space, probes, secret, queue, RateLimiter(cfg.rate), make_sender_config(cfg, seed));

    Engine engine(probes, secret, DedupWindow(cfg.dedup_capacity, cfg.dedup_horizon), make_engine_config(cfg));

    RunResult result;
    RunStats& st = result.stats;
    std::atomic<bool> stop{false};
    EventChannel channel;
    std::uint64_t received = 0;
    ParseCounters parse_counters;
    std::size_t peak_engine = engine.memory_bytes();

    std::thread sink_thread([&] {
        while (auto e = channel.pop()) sink.write(*e);
    });

    std::thread receiver([&] {
        std::vector<ScanEvent> events;
        std::vector<Reply> replies;
        while (!stop.load(std::memory_order_acquire)) {
            auto frame = transport.receive(20);
            if (!frame) continue;
            ++received;
            const auto parsed = parse(*frame, transport.now());
            const PacketView* pv = parse_counters.count(parsed);
            if (!pv || pv->quad.dst_ip != cfg.source_ip || pv->quad.dst_port < cfg.source_ports.lo ||
                pv->quad.dst_port > cfg.source_ports.hi)
                continue;
            events.clear();
            replies.clear();
            engine.handle_packet(*pv, events, replies);
            for (auto& e : events) channel.push(std::move(e));
            for (auto& r : replies) queue.push(std::move(r.frame));
            peak_engine = std::max(peak_engine, engine.memory_bytes());
        }
    });

    while (true) {
        const Timestamp now = transport.now();
        Action a = sender.next_action(now);
        if (a.kind == Action::Kind::Done) break;
        if (a.kind == Action::Kind::Transmit) {
            const auto dst = frame_destination(a.frame);
            if (!dst || excluded.contains(*dst)) {
                ++st.blocked_transmits;
                continue;
            }
            transport.send(a.frame);
            continue;
        }
        // Short naps so replies queued meanwhile are not held back.
        const double nap = std::min(a.until - now, 0.001);
        if (nap > 0) std::this_thread::sleep_for(std::chrono::duration<double>(nap));
    }

    stop.store(true, std::memory_order_release);
    receiver.join();
    channel.close();
    sink_thread.join();

    const auto& c = engine.counters();
    st.sent_syn = sender.counters().sent_syn;
    st.sent_reply = sender.counters().sent_reply;
    st.received = received;
    st.port_hits = c.open + c.zero_window;
    st.banners = c.banners;
    st.zero_windows = c.zero_window;
    st.closed = c.closed;
    st.unsolicited = c.unsolicited;
    st.dedup_drops = c.dedup_drops;
    st.callback_overflows = queue.overflows();
    st.parse_rejects = parse_counters.total_rejected();
    st.probe_faults = c.probe_faults + sender.counters().probe_faults;
    st.elapsed = transport.now();
    st.peak_engine_bytes = peak_engine;
    result.engine = c;
    sink.write(st);
    sink.flush();
    return result;
}

} // namespace cookiescan
