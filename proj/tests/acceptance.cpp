// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "cookiescan/kernels.hpp"
#include "cookiescan/permute.hpp"
#include "cookiescan/scan.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>

using namespace cookiescan;
using namespace cookiescan::tcp_flags;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Aligned CIDR blocks covering exactly n addresses from `base` upward.
std::vector<Cidr> blocks(std::uint64_t n, Ipv4 base) {
    std::vector<Cidr> out;
    std::uint32_t at = base.value;
    for (int bit = 31; bit >= 0; --bit) {
        const std::uint64_t size = std::uint64_t{1} << bit;
        if (n & size) {
            out.push_back({Ipv4{at}, static_cast<std::uint8_t>(32 - bit)});
            at += static_cast<std::uint32_t>(size);
        }
    }
    return out;
}

std::uint64_t key_of(Ipv4 ip, std::uint16_t port) { return (std::uint64_t{ip.value} << 16) | port; }

// ---------------------------------------------------------------------------
// NDJSON schema

bool valid_event_line(const nlohmann::ordered_json& j, std::string& why) {
    static const std::vector<std::string> keys{"ts", "ip", "port", "event", "probe", "len", "data_b64", "report"};
    static const std::set<std::string> kinds{"open", "open-zero-window", "closed", "banner", "unsolicited"};
    std::vector<std::string> got;
    for (const auto& [k, v] : j.items()) got.push_back(k);
    if (got != keys) return why = "keys out of order", false;
    if (!j["ts"].is_number() || j["ts"].get<double>() < 0) return why = "ts", false;
    if (!j["ip"].is_string() || !Ipv4::parse(j["ip"].get<std::string>())) return why = "ip", false;
    if (!j["port"].is_number_unsigned() || j["port"].get<unsigned>() > 65535) return why = "port", false;
    if (!j["event"].is_string() || !kinds.count(j["event"].get<std::string>())) return why = "event", false;
    if (!j["probe"].is_string()) return why = "probe", false;
    if (!j["len"].is_number_unsigned() || !j["data_b64"].is_string()) return why = "len/data_b64", false;
    const auto len = j["len"].get<std::size_t>();
    if (j["data_b64"].get<std::string>().size() != 4 * ((len + 2) / 3)) return why = "data_b64 length", false;
    if (!(j["report"].is_null() || j["report"].is_object())) return why = "report", false;
    return true;
}

bool valid_ndjson(const std::string& text, std::string& why) {
    std::istringstream in(text);
    std::string line, last;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(line);
        } catch (const std::exception&) {
            return why = fmt("line %zu is not JSON", n), false;
        }
        if (j.contains("stats")) {
            if (j.size() != 1 || !j["stats"].is_object()) return why = "malformed stats line", false;
            last = line;
            continue;
        }
        if (!last.empty()) return why = "events after the stats line", false;
        if (!valid_event_line(j, why)) return why = fmt("line %zu: ", n) + why, false;
    }
    if (last.empty()) return why = "no stats line", false;
    return true;
}

// ---------------------------------------------------------------------------
// Simulated runs

struct PerTarget {
    unsigned syn = 0;
    unsigned with_payload = 0;
    std::size_t payload_bytes = 0;
    unsigned rst = 0;
};

struct Observed {
    RunResult result;
    std::unordered_set<std::uint64_t> open, zero_window, closed, banner;
    std::size_t open_events = 0, banner_events = 0;
    std::unordered_map<std::uint64_t, PerTarget> tx;
    std::size_t syn_while_queued = 0;
    std::size_t replies = 0, syns_after_first_reply = 0, max_queue_depth = 0;
    std::size_t engine_min = SIZE_MAX, engine_max = 0;
    std::size_t peak_in_flight = 0;
    bool schema_ok = false;
    std::string schema_why;
    double wall = 0;
};

ScanConfig sim_config(std::vector<Cidr> targets, double rate) {
    ScanConfig cfg;
    cfg.targets = std::move(targets);
    cfg.ports = {80};
    cfg.rate = rate;
    cfg.scenario_path = "inline";
    return cfg;
}

Observed simulate(const ScanConfig& cfg, const sim::Scenario& sc, bool track_in_flight = false) {
    Observed o;
    const auto t0 = Clock::now();
    const ProbeRegistry reg = build_registry(cfg);
    std::ostringstream out;
    NdjsonSink sink(out, reg);
    sim::SimNetwork* net = nullptr;

    SimHooks hooks;
    hooks.on_network = [&](sim::SimNetwork& n) { net = &n; };
    hooks.on_transmit = [&](Timestamp, const Action& a) {
        const auto parsed = parse(a.frame);
        const auto& pv = std::get<PacketView>(parsed);
        auto& t = o.tx[key_of(pv.quad.dst_ip, pv.quad.dst_port)];
        const bool syn = pv.has(kSyn);
        if (syn) {
            ++t.syn;
            if (a.queue_depth > 0) ++o.syn_while_queued;
            if (o.replies > 0) ++o.syns_after_first_reply;
        } else {
            ++o.replies;
        }
        if (pv.has(kRst)) ++t.rst;
        if (!pv.payload.empty()) {
            ++t.with_payload;
            t.payload_bytes += pv.payload.size();
        }
        o.max_queue_depth = std::max(o.max_queue_depth, a.queue_depth);
    };
    hooks.on_event = [&](const ScanEvent& e) {
        const auto k = key_of(e.quad.dst_ip, e.quad.dst_port);
        switch (e.kind) {
        case EventKind::Open: o.open.insert(k), ++o.open_events; break;
        case EventKind::OpenZeroWindow: o.zero_window.insert(k); break;
        case EventKind::Closed: o.closed.insert(k); break;
        case EventKind::Banner: o.banner.insert(k), ++o.banner_events; break;
        case EventKind::Unsolicited: break;
        }
    };
    hooks.on_engine = [&](const Engine& e) {
        const auto m = e.memory_bytes();
        o.engine_min = std::min(o.engine_min, m);
        o.engine_max = std::max(o.engine_max, m);
        if (track_in_flight) o.peak_in_flight = std::max(o.peak_in_flight, net->world().open_connections());
    };
    o.result = run_sim(cfg, sc, sink, hooks);
    o.schema_ok = valid_ndjson(out.str(), o.schema_why);
    o.wall = seconds_since(t0);
    return o;
}

sim::Scenario lossy(sim::BehaviorKind kind, std::uint64_t seed, double to, double from, double syn = 0.0) {
    auto sc = sim::Scenario::uniform(kind, seed);
    sc.link.loss_to_target = to;
    sc.link.loss_from_target = from;
    sc.link.loss_syn = syn;
    return sc;
}

Verdict schema_failure(const Observed& o) { return {false, "invalid NDJSON: " + o.schema_why}; }

const Ipv4 kBase{100, 64, 0, 0};
constexpr std::uint64_t kTargets = 10000;

// ---------------------------------------------------------------------------
// Criteria

Verdict cookie_soundness() {
    const auto t0 = Clock::now();
    const auto r = kernels::cookie_roundtrip_sweep(0xC0FFEE, 256);
    const double secs = seconds_since(t0);
    const bool pass = r.checked == 16ull * 4096 * 256 && r.transmit_failures == 0 && r.synack_collisions == 0 &&
                      r.carry_cases > 0 && r.wrap_cases > 0 && secs < 60.0;
    return {pass, fmt("%llu cases, %llu failures, %llu carry, %llu wrap, %.2f s", (unsigned long long)r.checked,
                      (unsigned long long)r.transmit_failures, (unsigned long long)r.carry_cases,
                      (unsigned long long)r.wrap_cases, secs)};
}

Verdict false_positive_rate() {
    const std::uint64_t n = 10'000'000;
    const auto hits = kernels::synack_false_positives(n, 0xBEEF, 0xFACADE);
    const double p = 1.0 / 65536.0;
    const double rate = hits / double(n);
    const double sigma = std::sqrt(p * (1 - p) / n);
    const double z = (rate - p) / sigma;
    return {std::abs(z) <= 3.0, fmt("%llu hits in 1e7, rate %.4g vs %.4g, z = %.2f", (unsigned long long)hits, rate, p, z)};
}

Verdict lossless_coverage() {
    const auto o = simulate(sim_config(blocks(kTargets, kBase), 10000), lossy(sim::BehaviorKind::Normal, 31, 0, 0));
    if (!o.schema_ok) return schema_failure(o);
    const double cov = o.banner.size() / double(kTargets);
    return {o.banner.size() == kTargets && o.wall < 60.0,
            fmt("coverage %.4f%% (%zu/%llu), %.2f s", 100 * cov, o.banner.size(), (unsigned long long)kTargets, o.wall)};
}

Verdict lossy_coverage() {
    const double p = 0.01;
    const auto o = simulate(sim_config(blocks(kTargets, kBase), 10000), lossy(sim::BehaviorKind::Normal, 41, p, p));
    if (!o.schema_ok) return schema_failure(o);
    kernels::LossModel m;
    m.loss_to_target = m.loss_from_target = p;
    const std::uint64_t oracle_n = 1'000'000;
    const double oracle = kernels::banner_coverage_oracle(oracle_n, m, 4242) / double(oracle_n);
    const double cov = o.banner.size() / double(kTargets);
    bool pass = std::abs(cov - oracle) <= 0.015;
    std::string detail = fmt("loss 1%%: coverage %.4f vs oracle %.4f", cov, oracle);

    for (double q : {0.01, 0.02}) {
        const auto s = simulate(sim_config(blocks(kTargets, kBase), 10000),
                                lossy(sim::BehaviorKind::Normal, 43, 0, 0, q));
        if (!s.schema_ok) return schema_failure(s);
        const double c = s.banner.size() / double(kTargets);
        pass = pass && std::abs(c - (1 - q)) <= 0.005;
        detail += fmt("; syn loss %.0f%%: %.4f vs %.4f", 100 * q, c, 1 - q);
    }
    return {pass, detail};
}

Verdict rate_invariance() {
    auto sc = sim::load_scenario(std::string(COOKIESCAN_TEST_DATA) + "/../scenarios/example.yaml");
    sc.link.loss_to_target = sc.link.loss_from_target = 0.01;
    std::vector<std::pair<double, Observed>> runs;
    for (double rate : {1e3, 5e4, 5e5}) {
        runs.emplace_back(rate, simulate(sim_config(blocks(kTargets, kBase), rate), sc));
        if (!runs.back().second.schema_ok) return schema_failure(runs.back().second);
    }
    const double hits0 = double(runs[0].second.result.stats.port_hits);
    const double ban0 = double(runs[0].second.result.stats.banners);
    double worst = 0;
    std::string detail;
    for (const auto& [rate, o] : runs) {
        const double h = double(o.result.stats.port_hits), b = double(o.result.stats.banners);
        worst = std::max({worst, std::abs(h - hits0) / hits0, std::abs(b - ban0) / ban0});
        detail += fmt("%s%.0f pps: %llu hits %llu banners", detail.empty() ? "" : "; ", rate,
                      (unsigned long long)o.result.stats.port_hits, (unsigned long long)o.result.stats.banners);
    }
    detail += fmt("; max deviation %.3f%%", 100 * worst);
    return {worst <= 0.01 && hits0 > 0 && ban0 > 0, detail};
}

Verdict multi_attempt_convergence() {
    const auto sc = lossy(sim::BehaviorKind::Normal, 61, 0.02, 0.02);
    std::vector<std::size_t> unique(16, 0);
    for (unsigned r = 1; r <= 15; ++r) {
        auto cfg = sim_config(blocks(kTargets, kBase), 50000);
        cfg.retries = r;
        // Passes further apart than the dedup horizon so a retry is a fresh probe.
        cfg.inter_attempt_gap = cfg.dedup_horizon + 2.0;
        const auto o = simulate(cfg, sc);
        if (!o.schema_ok) return schema_failure(o);
        unique[r] = o.banner.size();
    }
    bool monotone = true;
    for (unsigned r = 2; r <= 15; ++r) monotone = monotone && unique[r] >= unique[r - 1];
    const double late_gain = double(unique[15] - std::min(unique[15], unique[10])) / double(unique[10]);
    std::string series;
    for (unsigned r : {1u, 2u, 3u, 5u, 10u, 15u}) series += fmt("%s%u:%zu", series.empty() ? "" : " ", r, unique[r]);
    return {monotone && late_gain < 0.001,
            fmt("unique banners by retries [%s], monotone %s, gain 10->15 %.4f%%", series.c_str(),
                monotone ? "yes" : "no", 100 * late_gain)};
}

Verdict zero_window_exclusion() {
    const std::uint64_t n = 1000;
    const auto o = simulate(sim_config(blocks(n, kBase), 10000), lossy(sim::BehaviorKind::ZeroWindow, 71, 0, 0));
    if (!o.schema_ok) return schema_failure(o);
    std::size_t payload_bytes = 0, one_rst = 0;
    for (const auto& [k, t] : o.tx) {
        payload_bytes += t.payload_bytes;
        one_rst += t.rst == 1;
    }
    return {o.zero_window.size() == n && payload_bytes == 0 && one_rst == n && o.open.empty(),
            fmt("%zu/%llu open-zero-window, %zu payload bytes sent, %zu targets with exactly one RST",
                o.zero_window.size(), (unsigned long long)n, payload_bytes, one_rst)};
}

Verdict deduplication() {
    const std::uint64_t n = 1000;
    auto drop = sim::Scenario::uniform(sim::BehaviorKind::MidHandshakeDrop, 81);
    drop.population[0].behavior.synack_retx = 3;
    const auto o = simulate(sim_config(blocks(n, kBase), 10000), drop);
    if (!o.schema_ok) return schema_failure(o);
    std::size_t exactly_one = 0;
    for (const auto& [k, t] : o.tx) exactly_one += t.with_payload == 1;
    const auto dups = o.result.engine.dedup_drops;

    // Half the population drops our ACK, the other half is normal but loses
    // SYN-ACKs now and then, so it retransmits too.
    sim::Scenario mixed;
    mixed.seed = 82;
    mixed.link.loss_from_target = 0.05;
    sim::PopulationEntry a, b;
    a.fraction = 0.5;
    a.behavior.kind = sim::BehaviorKind::MidHandshakeDrop;
    a.behavior.synack_retx = 3;
    b.fraction = 0.5;
    b.behavior.kind = sim::BehaviorKind::Normal;
    mixed.population = {a, b};
    const auto m = simulate(sim_config(blocks(kTargets, kBase), 10000), mixed);
    if (!m.schema_ok) return schema_failure(m);
    sim::World w(mixed);
    std::size_t normal = 0, normal_banner = 0;
    for (const auto& cidr : blocks(kTargets, kBase))
        for (std::uint64_t i = 0; i < (std::uint64_t{1} << (32 - cidr.prefix)); ++i) {
            const Endpoint e{Ipv4{cidr.base.value + static_cast<std::uint32_t>(i)}, 80};
            if (w.behavior_for(e)->kind != sim::BehaviorKind::Normal) continue;
            ++normal;
            normal_banner += m.banner.count(key_of(e.ip, e.port));
        }
    kernels::LossModel lm;
    lm.loss_from_target = 0.05;
    const double expected = kernels::banner_coverage_expected(lm);
    const double cov = normal_banner / double(normal);
    const double sigma = std::sqrt(expected * (1 - expected) / normal);
    return {exactly_one == n && o.tx.size() == n && std::abs(cov - expected) <= 4 * sigma,
            fmt("%zu/%llu targets got exactly one ACK+payload, %llu duplicate SYN-ACKs dropped; "
                "normal targets in mixed run: coverage %.4f vs %.4f",
                exactly_one, (unsigned long long)n, (unsigned long long)dups, cov, expected)};
}

Verdict probe_starver() {
    const std::uint64_t n = 1000;
    const auto o = simulate(sim_config(blocks(n, kBase), 10000), lossy(sim::BehaviorKind::ProbeStarver, 91, 0, 0));
    if (!o.schema_ok) return schema_failure(o);
    std::size_t exact = 0;
    for (const auto& [k, t] : o.tx) exact += t.syn == 1 && t.with_payload == 1 && t.rst == 0;
    const std::size_t total_tx = o.result.stats.sent_syn + o.result.stats.sent_reply;
    return {o.open_events == n && o.banner_events == 0 && exact == n && total_tx == 2 * n &&
                o.engine_min == o.engine_max,
            fmt("%zu open, %zu banner, %zu transmissions for %llu targets, engine %zu..%zu bytes", o.open_events,
                o.banner_events, total_tx, (unsigned long long)n, o.engine_min, o.engine_max)};
}

Verdict statelessness() {
    std::vector<Observed> runs;
    for (std::uint64_t n : {100ull, 100000ull}) {
        // Fast enough that every SYN is out before the first answer returns.
        runs.push_back(simulate(sim_config(blocks(n, kBase), 2e7), lossy(sim::BehaviorKind::ProbeStarver, 101, 0, 0),
                                true));
        if (!runs.back().schema_ok) return schema_failure(runs.back());
    }
    const std::size_t cap = DedupWindow::kDefaultCapacity;
    // Ring of (key, timestamp) plus an index at load factor <= 1/2, plus a page of fixed fields.
    const std::size_t bound = cap * 16 + std::bit_ceil(2 * cap) * 4 + 4096;
    const auto& small = runs[0];
    const auto& large = runs[1];
    const bool pass = small.result.stats.peak_engine_bytes == large.result.stats.peak_engine_bytes &&
                      large.engine_min == large.engine_max && large.result.stats.peak_engine_bytes <= bound &&
                      large.peak_in_flight >= 99000;
    return {pass, fmt("peak in flight %zu vs %zu; engine bytes %zu vs %zu (bound %zu)", small.peak_in_flight,
                      large.peak_in_flight, small.result.stats.peak_engine_bytes,
                      large.result.stats.peak_engine_bytes, bound)};
}

Verdict permutation() {
    std::size_t checked = 0, ok = 0;
    for (std::uint64_t n : {1ull, 2ull, 10ull, 1000ull, 65537ull})
        for (std::uint64_t seed : {1ull, 7ull, 0xDEADBEEFull, 1ull << 40, ~0ull}) {
            const Permutation perm(n, seed);
            std::set<std::uint64_t> seen;
            bool in_range = true;
            for (std::uint64_t i = 0; i < n; ++i) {
                const auto v = perm(i);
                in_range = in_range && v < n;
                seen.insert(v);
            }
            std::set<std::uint64_t> all;
            for (std::uint64_t i = 0; i < n; ++i) all.insert(i);
            ++checked;
            ok += in_range && seen == all && kernels::permutation_image(n, seed) == kernels::permutation_image_serial(n, seed);
        }
    return {ok == checked, fmt("%zu/%zu (N, seed) pairs visit every index exactly once", ok, checked)};
}

Verdict callback_priority() {
    const auto sc = sim::load_scenario(std::string(COOKIESCAN_TEST_DATA) + "/../scenarios/example.yaml");
    const auto o = simulate(sim_config(blocks(kTargets, kBase), 1e5), sc);
    if (!o.schema_ok) return schema_failure(o);
    return {o.syn_while_queued == 0 && o.replies > 0 && o.syns_after_first_reply > 0,
            fmt("%zu SYNs sent while replies were queued; %zu replies, %zu SYNs interleaved after the first reply, "
                "max queue depth %zu",
                o.syn_while_queued, o.replies, o.syns_after_first_reply, o.max_queue_depth)};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"cookie soundness", cookie_soundness},
        {"false-positive rate", false_positive_rate},
        {"loss-free coverage", lossless_coverage},
        {"lossy coverage", lossy_coverage},
        {"rate invariance", rate_invariance},
        {"multi-attempt convergence", multi_attempt_convergence},
        {"zero-window exclusion", zero_window_exclusion},
        {"deduplication", deduplication},
        {"probe starver", probe_starver},
        {"statelessness", statelessness},
        {"permutation", permutation},
        {"callback priority", callback_priority},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("%s %2zu %-26s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
