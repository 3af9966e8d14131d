#include "cookiescan/scan.hpp"

#include <algorithm>

namespace cookiescan {

void validate(const ScanConfig& cfg) {
    if (cfg.targets.empty()) throw ConfigError("no targets given");
    if (cfg.ports.empty()) throw ConfigError("no ports given");
    if (!(cfg.rate > 0.0)) throw ConfigError("rate must be > 0");
    if (cfg.retries < 1) throw ConfigError("retries must be >= 1");
    if (cfg.inter_attempt_gap < 0.0) throw ConfigError("inter-attempt gap must be >= 0");
    if (cfg.cooldown < 0.0) throw ConfigError("cooldown must be >= 0");
    if (cfg.window == 0) throw ConfigError("advertised window must be > 0");
    if (cfg.probes.empty()) throw ConfigError("at least one probe is required");
    if (cfg.probes.size() > kMaxProbeTypes)
        throw ConfigError("at most " + std::to_string(kMaxProbeTypes) + " probes per run");
    if (cfg.source_ports.lo == 0 || cfg.source_ports.lo > cfg.source_ports.hi)
        throw ConfigError("invalid source port range");
    if (cfg.dedup_capacity == 0) throw ConfigError("dedup capacity must be > 0");
    if (!(cfg.dedup_horizon > 0.0)) throw ConfigError("dedup horizon must be > 0");
    if (cfg.callback_capacity == 0) throw ConfigError("callback queue capacity must be > 0");
    if (cfg.transport == TransportKind::Sim && cfg.scenario_path.empty())
        throw ConfigError("sim transport requires a scenario file");
    if (cfg.transport == TransportKind::Live) {
        if (!cfg.live_opt_in)
            throw ConfigError("live transport requires explicit opt-in (--live and COOKIESCAN_LIVE_ACK=1)");
        if (cfg.interface.empty()) throw ConfigError("live transport requires an interface");
    }
}

ProbeRegistry build_registry(const ScanConfig& cfg) {
    ProbeRegistry reg;
    try {
        for (const auto& p : cfg.probes) reg.add(make_builtin_probe(p.name, p.args));
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    reg.freeze();
    return reg;
}

TargetSpace build_target_space(const ScanConfig& cfg) {
    AddressSet addrs(cfg.targets);
    addrs.subtract(AddressSet(cfg.exclude));
    return TargetSpace(std::move(addrs), cfg.ports);
}

SenderConfig make_sender_config(const ScanConfig& cfg, std::uint64_t seed) {
    SenderConfig sc;
    sc.source_ip = cfg.source_ip;
    sc.source_ports = cfg.source_ports;
    sc.seed = seed;
    sc.retries = cfg.retries;
    sc.inter_attempt_gap = cfg.inter_attempt_gap;
    sc.cooldown = cfg.cooldown;
    sc.build.advertised_window = cfg.window;
    return sc;
}

EngineConfig make_engine_config(const ScanConfig& cfg) {
    EngineConfig ec;
    ec.build.advertised_window = cfg.window;
    ec.banner_cap = cfg.banner_cap;
    ec.report_unsolicited = cfg.report_unsolicited;
    return ec;
}

namespace {

bool addressed_to_us(const PacketView& pv, const ScanConfig& cfg) {
    return pv.quad.dst_ip == cfg.source_ip && pv.quad.dst_port >= cfg.source_ports.lo &&
           pv.quad.dst_port <= cfg.source_ports.hi;
}

} // namespace

RunResult run_sim(const ScanConfig& cfg, const sim::Scenario& scenario, NdjsonSink& sink, const SimHooks& hooks) {
    const ProbeRegistry probes = build_registry(cfg);
    const TargetSpace space = build_target_space(cfg);
    const AddressSet excluded(cfg.exclude);
    const std::uint64_t seed = cfg.seed.value_or(scenario.seed);
    const HashSecret secret = HashSecret::from_seed(seed);

    CallbackQueue queue(cfg.callback_capacity);
    Sender sender(space, probes, secret, queue, RateLimiter(cfg.rate), make_sender_config(cfg, seed));
    Engine engine(probes, secret, DedupWindow(cfg.dedup_capacity, cfg.dedup_horizon), make_engine_config(cfg));
    sim::SimNetwork net(scenario);
    if (hooks.on_network) hooks.on_network(net);

    RunResult result;
    RunStats& st = result.stats;
    ParseCounters parse_counters;
    std::vector<ScanEvent> events;
    std::vector<Reply> replies;

    std::uint64_t wake_token = 0;
    Timestamp sleeping_until = 0.0;
    net.schedule_wake(0.0, wake_token);
    st.peak_engine_bytes = engine.memory_bytes();

    bool done = false;
    while (!done) {
        auto ev = net.next();
        if (!ev) break;
        const Timestamp now = net.now();

        if (const auto* w = std::get_if<sim::Wake>(&*ev)) {
            if (w->token != wake_token) continue;
            while (true) {
                Action a = sender.next_action(now);
                if (a.kind == Action::Kind::Transmit) {
                    const auto dst = frame_destination(a.frame);
                    if (!dst || excluded.contains(*dst)) {
                        ++st.blocked_transmits;
                        continue;
                    }
                    if (hooks.on_transmit) hooks.on_transmit(now, a);
                    net.send(a.frame);
                    continue;
                }
                if (a.kind == Action::Kind::Wait) {
                    sleeping_until = a.until;
                    net.schedule_wake(a.until, ++wake_token);
                } else {
                    done = true;
                }
                break;
            }
            continue;
        }

        auto& arrival = std::get<sim::Arrival>(*ev);
        ++st.received;
        const auto parsed = parse(arrival.frame, now);
        const PacketView* pv = parse_counters.count(parsed);
        if (!pv || !addressed_to_us(*pv, cfg)) continue;

        events.clear();
        replies.clear();
        engine.handle_packet(*pv, events, replies);
        for (const auto& e : events) {
            sink.write(e);
            if (hooks.on_event) hooks.on_event(e);
        }
        bool queued = false;
        for (auto& r : replies) queued |= queue.push(std::move(r.frame));
        if (queued && sleeping_until > now) {
            sleeping_until = now;
            net.schedule_wake(now, ++wake_token);
        }
        st.peak_engine_bytes = std::max(st.peak_engine_bytes, engine.memory_bytes());
        if (hooks.on_engine) hooks.on_engine(engine);
    }

    const auto& ec = engine.counters();
    st.sent_syn = sender.counters().sent_syn;
    st.sent_reply = sender.counters().sent_reply;
    st.port_hits = ec.open + ec.zero_window;
    st.banners = ec.banners;
    st.zero_windows = ec.zero_window;
    st.closed = ec.closed;
    st.unsolicited = ec.unsolicited;
    st.dedup_drops = ec.dedup_drops;
    st.callback_overflows = queue.overflows();
    st.parse_rejects = parse_counters.total_rejected();
    st.probe_faults = ec.probe_faults + sender.counters().probe_faults;
    st.elapsed = net.now();
    result.engine = ec;
    result.link = net.counters();
    sink.write(st);
    sink.flush();
    return result;
}

} // namespace cookiescan
