#include "cookiescan/simnet.hpp"

#include "cookiescan/mix.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace cookiescan::sim {

using namespace tcp_flags;

std::string_view to_string(BehaviorKind k) {
    switch (k) {
    case BehaviorKind::Normal: return "normal";
    case BehaviorKind::ZeroWindow: return "zero-window";
    case BehaviorKind::Shunning: return "shunning";
    case BehaviorKind::MidHandshakeDrop: return "mid-handshake-drop";
    case BehaviorKind::AckBlocked: return "ack-blocked";
    case BehaviorKind::ProbeStarver: return "probe-starver";
    case BehaviorKind::Closed: return "closed";
    }
    return "normal";
}

std::optional<BehaviorKind> behavior_from_string(std::string_view s) {
    for (auto k : {BehaviorKind::Normal, BehaviorKind::ZeroWindow, BehaviorKind::Shunning,
                   BehaviorKind::MidHandshakeDrop, BehaviorKind::AckBlocked, BehaviorKind::ProbeStarver,
                   BehaviorKind::Closed})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
    };
    prob(link.loss_to_target, "link.loss_to_target");
    prob(link.loss_from_target, "link.loss_from_target");
    prob(link.loss_syn, "link.loss_syn");
    prob(link.dup_prob, "link.dup_prob");
    if (!(link.latency_min_ms >= 0.0) || link.latency_max_ms < link.latency_min_ms)
        throw std::invalid_argument("link.latency_ms must be a non-negative value or [min, max] range");
    if (!(timing.rto > 0.0)) throw std::invalid_argument("endpoint.rto_s must be positive");
    double total = 0.0;
    for (const auto& e : population) {
        prob(e.fraction, "population fraction");
        if (e.behavior.segments == 0) throw std::invalid_argument("population segments must be >= 1");
        total += e.fraction;
    }
    if (total > 1.0 + 1e-9) throw std::invalid_argument("population fractions sum to more than 1");
}

Scenario Scenario::uniform(BehaviorKind kind, std::uint64_t seed) {
    Scenario s;
    s.seed = seed;
    PopulationEntry e;
    e.behavior.kind = kind;
    s.population.push_back(e);
    return s;
}

namespace {

template <typename T>
T get_or(const YAML::Node& n, const char* key, T fallback) {
    const auto v = n[key];
    return v ? v.as<T>() : fallback;
}

void reject_unknown_keys(const YAML::Node& n, std::initializer_list<std::string_view> allowed, const char* where) {
    if (!n.IsMap()) throw std::invalid_argument(std::string(where) + " must be a mapping");
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
    }
}

} // namespace

Scenario parse_scenario(std::istream& in) {
    Scenario s;
    try {
        const YAML::Node root = YAML::Load(in);
        reject_unknown_keys(root, {"seed", "link", "endpoint", "population"}, "scenario");
        s.seed = get_or<std::uint64_t>(root, "seed", 1);

        if (const auto link = root["link"]) {
            reject_unknown_keys(link, {"loss_to_target", "loss_from_target", "loss_syn", "dup_prob", "latency_ms"},
                                "link");
            s.link.loss_to_target = get_or(link, "loss_to_target", 0.0);
            s.link.loss_from_target = get_or(link, "loss_from_target", 0.0);
            s.link.loss_syn = get_or(link, "loss_syn", 0.0);
            s.link.dup_prob = get_or(link, "dup_prob", 0.0);
            if (const auto lat = link["latency_ms"]) {
                if (lat.IsSequence()) {
                    if (lat.size() != 2) throw std::invalid_argument("link.latency_ms range needs [min, max]");
                    s.link.latency_min_ms = lat[0].as<double>();
                    s.link.latency_max_ms = lat[1].as<double>();
                } else {
                    s.link.latency_min_ms = s.link.latency_max_ms = lat.as<double>();
                }
            }
        }
        if (const auto ep = root["endpoint"]) {
            reject_unknown_keys(ep, {"synack_retries", "data_retries", "rto_s", "window"}, "endpoint");
            s.timing.synack_retries = get_or(ep, "synack_retries", s.timing.synack_retries);
            s.timing.data_retries = get_or(ep, "data_retries", s.timing.data_retries);
            s.timing.rto = get_or(ep, "rto_s", s.timing.rto);
            s.timing.window = get_or<std::uint16_t>(ep, "window", s.timing.window);
        }
        const auto pop = root["population"];
        if (!pop || !pop.IsSequence() || pop.size() == 0)
            throw std::invalid_argument("scenario needs a non-empty 'population' list");
        for (const auto& item : pop) {
            reject_unknown_keys(item, {"fraction", "behavior", "banner", "segments", "synack_retx"}, "population entry");
            PopulationEntry e;
            e.fraction = get_or(item, "fraction", 1.0);
            const auto name = get_or<std::string>(item, "behavior", "normal");
            const auto kind = behavior_from_string(name);
            if (!kind) throw std::invalid_argument("unknown behavior '" + name + "'");
            e.behavior.kind = *kind;
            e.behavior.banner = get_or(item, "banner", e.behavior.banner);
            e.behavior.segments = get_or(item, "segments", 1u);
            if (item["synack_retx"]) e.behavior.synack_retx = item["synack_retx"].as<unsigned>();
            s.population.push_back(std::move(e));
        }
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file '" + path + "'");
    return parse_scenario(in);
}

// ---------------------------------------------------------------------------
// World

World::World(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    double acc = 0.0;
    for (const auto& e : scenario_.population) cumulative_.push_back(acc += e.fraction);
}

const Behavior* World::behavior_for(const Endpoint& target) const {
    const double u =
        unit_interval(mix64(scenario_.seed ^ mix64((std::uint64_t{target.ip.value} << 16) | target.port)));
    for (std::size_t i = 0; i < cumulative_.size(); ++i)
        if (u < cumulative_[i]) return &scenario_.population[i].behavior;
    return nullptr;
}

unsigned World::synack_budget(const Conn& c) const {
    return c.behavior->synack_retx.value_or(scenario_.timing.synack_retries);
}

void World::arm(const QuadKey& key, Conn& c, Timestamp at) {
    ++c.generation;
    pending_timers_.push_back({key, c.generation, at});
}

std::vector<World::Timer> World::take_timers() { return std::exchange(pending_timers_, {}); }

Bytes World::synack(const QuadKey& key, const Conn& c) const {
    const std::uint16_t window = c.behavior->kind == BehaviorKind::ZeroWindow ? 0 : scenario_.timing.window;
    return build_segment({.quad = key.swapped(),
                          .seq = c.isn,
                          .ack = c.irs + 1u,
                          .flags = kSyn | kAck,
                          .window = window,
                          .ip_id = 0,
                          .ttl = 64,
                          .mss = 1460,
                          .payload = {}});
}

std::vector<Bytes> World::banner_segments(const QuadKey& key, const Conn& c) const {
    const auto& text = c.behavior->banner;
    // Never more than the scanner's advertised window before it acknowledges.
    const std::size_t sendable = std::min<std::size_t>(text.size(), c.peer_window);
    std::vector<Bytes> out;
    if (sendable == 0) return out;
    const std::size_t parts = std::min<std::size_t>(c.behavior->segments, text.size());
    const std::size_t chunk = (text.size() + parts - 1) / parts;
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
    for (std::size_t off = 0; off < sendable; off += chunk) {
        const std::size_t n = std::min(chunk, sendable - off);
        const bool last = off + n == text.size();
        out.push_back(build_segment({.quad = key.swapped(),
                                     .seq = c.isn + 1u + static_cast<std::uint32_t>(off),
                                     .ack = c.rcv_nxt,
                                     .flags = static_cast<std::uint8_t>(last ? (kFin | kPsh | kAck) : kAck),
                                     .window = scenario_.timing.window,
                                     .ip_id = 0,
                                     .ttl = 64,
                                     .mss = std::nullopt,
                                     .payload = {bytes + off, n}}));
    }
    return out;
}

void World::abandon(const QuadKey& key, const Conn& c) {
    if (c.behavior->kind == BehaviorKind::Shunning && !c.data_seen) shunned_.insert({key.dst(), key.src_ip.value});
}

namespace {

// Stamp a per-host IP ID so retransmissions are distinguishable on the wire.
void stamp_ip_id(Bytes& frame, std::uint16_t id) {
    frame[4] = static_cast<std::uint8_t>(id >> 8);
    frame[5] = static_cast<std::uint8_t>(id);
    frame[10] = frame[11] = 0;
    const std::uint16_t sum = internet_checksum({frame.data(), kIpv4HeaderLen});
    frame[10] = static_cast<std::uint8_t>(sum >> 8);
    frame[11] = static_cast<std::uint8_t>(sum);
}

} // namespace

std::vector<TimedFrame> World::deliver(std::span<const std::uint8_t> frame, Timestamp now) {
    std::vector<TimedFrame> out;
    const auto parsed = parse(frame, now);
    const auto* pv = std::get_if<PacketView>(&parsed);
    if (!pv) return out;

    const QuadKey key = pv->quad;
    const Behavior* beh = behavior_for(key.dst());
    if (!beh) return out;
    const std::uint8_t f = pv->flags;
    auto emit = [&](Bytes b) {
        stamp_ip_id(b, ip_id_++);
        out.push_back({std::move(b), now});
    };

    if (beh->kind == BehaviorKind::Closed) {
        if ((f & kSyn) && !(f & (kAck | kRst)))
            emit(build_segment({.quad = key.swapped(),
                                .seq = 0,
                                .ack = pv->seqno + 1u,
                                .flags = kRst | kAck,
                                .window = 0,
                                .ip_id = 0,
                                .ttl = 64,
                                .mss = std::nullopt,
                                .payload = {}}));
        return out;
    }

    auto it = conns_.find(key);

    if (f & kRst) {
        if (it != conns_.end()) {
            const Conn& c = it->second;
            const std::uint32_t offset = pv->seqno - (c.irs + 1u);
            if (offset <= c.rcv_nxt - (c.irs + 1u) || (c.state == State::SynRcvd && offset == 0)) {
                abandon(key, c);
                conns_.erase(it);
            }
        }
        return out;
    }

    if ((f & kSyn) && !(f & kAck)) {
        if (beh->kind == BehaviorKind::Shunning && shuns(key.dst(), key.src_ip)) return out;
        if (it != conns_.end()) {
            Conn& c = it->second;
            if (c.state == State::SynRcvd && c.irs == pv->seqno) {
                emit(synack(key, c));
                return out;
            }
            if (c.irs == pv->seqno) return out; // duplicate SYN for a live connection
            abandon(key, c);
            conns_.erase(it);
            if (beh->kind == BehaviorKind::Shunning && shuns(key.dst(), key.src_ip)) return out;
        }
        Conn c;
        c.behavior = beh;
        c.irs = pv->seqno;
        c.isn = static_cast<std::uint32_t>(mix64(scenario_.seed ^ QuadKeyHash{}(key) ^ 0x5EEDu));
        c.peer_window = pv->window;
        c.rcv_nxt = c.irs + 1u;
        c.synack_sent = 1;
        auto [pos, inserted] = conns_.emplace(key, c);
        arm(key, pos->second, now + scenario_.timing.rto);
        emit(synack(key, pos->second));
        return out;
    }

    if (!(f & kAck) || it == conns_.end()) return out;
    Conn& c = it->second;
    if (c.state != State::SynRcvd) return out;
    if (pv->ackno != c.isn + 1u || pv->seqno != c.irs + 1u) return out;

    c.state = State::Established;
    c.rcv_nxt = c.irs + 1u + static_cast<std::uint32_t>(pv->payload.size());
    c.peer_window = pv->window;
    ++c.generation; // cancels the SYN-ACK retransmission timer

    switch (beh->kind) {
    case BehaviorKind::ZeroWindow:
        break;
    case BehaviorKind::ProbeStarver:
        if (!pv->payload.empty())
            emit(build_segment({.quad = key.swapped(),
                                .seq = c.isn + 1u,
                                .ack = c.rcv_nxt,
                                .flags = kAck,
                                .window = scenario_.timing.window,
                                .ip_id = 0,
                                .ttl = 64,
                                .mss = std::nullopt,
                                .payload = {}}));
        break;
    default: {
        auto segs = banner_segments(key, c);
        if (segs.empty()) break;
        c.data_seen = true;
        c.data_sent = 1;
        arm(key, c, now + scenario_.timing.rto);
        for (auto& s : segs) emit(std::move(s));
        break;
    }
    }
    return out;
}

std::vector<TimedFrame> World::fire(const Timer& t) {
    std::vector<TimedFrame> out;
    auto it = conns_.find(t.conn);
    if (it == conns_.end() || it->second.generation != t.generation) return out;
    Conn& c = it->second;
    auto emit = [&](Bytes b) {
        stamp_ip_id(b, ip_id_++);
        out.push_back({std::move(b), t.at});
    };

    if (c.state == State::SynRcvd) {
        if (c.synack_sent - 1 < synack_budget(c)) {
            ++c.synack_sent;
            arm(t.conn, c, t.at + scenario_.timing.rto);
            emit(synack(t.conn, c));
        } else {
            abandon(t.conn, c);
            conns_.erase(it);
        }
        return out;
    }
    if (c.data_sent > 0 && c.data_sent - 1 < scenario_.timing.data_retries) {
        ++c.data_sent;
        arm(t.conn, c, t.at + scenario_.timing.rto);
        for (auto& s : banner_segments(t.conn, c)) emit(std::move(s));
    } else {
        conns_.erase(it);
    }
    return out;
}

// ---------------------------------------------------------------------------
// SimNetwork

SimNetwork::SimNetwork(Scenario scenario) : world_(std::move(scenario)), rng_(world_.scenario().seed) {}

void SimNetwork::push(Timestamp at, Kind kind, std::uint64_t token) {
    queue_.push({std::max(at, now_), seq_++, kind, token});
}

double SimNetwork::latency() {
    const auto& l = world_.scenario().link;
    if (l.latency_max_ms <= l.latency_min_ms) return l.latency_min_ms / 1000.0;
    return (l.latency_min_ms + unit_interval(rng_()) * (l.latency_max_ms - l.latency_min_ms)) / 1000.0;
}

bool SimNetwork::chance(double p) {
    if (p <= 0.0) return false;
    return unit_interval(rng_()) < p;
}

void SimNetwork::schedule_wake(Timestamp at, std::uint64_t token) { push(at, Kind::Wake, token); }

void SimNetwork::send(std::span<const std::uint8_t> frame) {
    ++counters_.to_target;
    if (tap) tap(now_, frame);

    const auto& link = world_.scenario().link;
    const auto parsed = parse(frame, now_);
    const auto* pv = std::get_if<PacketView>(&parsed);
    bool drop = pv == nullptr;
    if (pv) {
        const std::uint8_t f = pv->flags;
        const bool syn_only = (f & kSyn) && !(f & kAck);
        if (syn_only && chance(link.loss_syn)) drop = true;
        if (!drop) {
            if (const Behavior* beh = world_.behavior_for(pv->quad.dst())) {
                const bool handshake_ack = (f & kAck) && !(f & (kSyn | kRst));
                if (beh->kind == BehaviorKind::MidHandshakeDrop && handshake_ack) drop = true;
                if (beh->kind == BehaviorKind::AckBlocked && !pv->payload.empty()) drop = true;
            }
        }
        if (!drop && chance(link.loss_to_target)) drop = true;
        if (!drop && drop_filter && drop_filter(now_, frame)) drop = true;
    }
    if (drop) {
        ++counters_.to_target_dropped;
        return;
    }
    const int copies = chance(link.dup_prob) ? 2 : 1;
    if (copies == 2) ++counters_.duplicated;
    for (int i = 0; i < copies; ++i) {
        const std::uint64_t slot = next_slot_++;
        frames_.emplace(slot, Bytes(frame.begin(), frame.end()));
        push(now_ + latency(), Kind::ToTarget, slot);
    }
}

void SimNetwork::transmit_from_target(TimedFrame f) {
    ++counters_.from_target;
    if (target_tap) target_tap(f.at, f.frame);
    const auto& link = world_.scenario().link;
    if (chance(link.loss_from_target)) {
        ++counters_.from_target_dropped;
        return;
    }
    const int copies = chance(link.dup_prob) ? 2 : 1;
    if (copies == 2) ++counters_.duplicated;
    for (int i = 0; i < copies; ++i) {
        const std::uint64_t slot = next_slot_++;
        frames_.emplace(slot, i + 1 == copies ? std::move(f.frame) : f.frame);
        push(f.at + latency(), Kind::ToScanner, slot);
    }
}

void SimNetwork::schedule_timers() {
    for (auto& t : world_.take_timers()) {
        const std::uint64_t slot = next_slot_++;
        const Timestamp at = t.at;
        timers_.emplace(slot, std::move(t));
        push(at, Kind::Timer, slot);
    }
}

std::optional<NetEvent> SimNetwork::next() {
    while (!queue_.empty()) {
        const Item item = queue_.top();
        queue_.pop();
        now_ = item.at;
        switch (item.kind) {
        case Kind::Wake:
            return Wake{item.token};
        case Kind::ToScanner: {
            auto node = frames_.extract(item.token);
            return Arrival{std::move(node.mapped())};
        }
        case Kind::ToTarget: {
            auto node = frames_.extract(item.token);
            for (auto& out : world_.deliver(node.mapped(), now_)) transmit_from_target(std::move(out));
            schedule_timers();
            break;
        }
        case Kind::Timer: {
            auto node = timers_.extract(item.token);
            for (auto& out : world_.fire(node.mapped())) transmit_from_target(std::move(out));
            schedule_timers();
            break;
        }
        }
    }
    return std::nullopt;
}

} // namespace cookiescan::sim
