#pragma once

// Deterministic in-process network for tests and acceptance runs.
//
// Remote endpoints are stateful TCP peers that retransmit on their own
// timers; the scanner side stays stateless. All randomness comes from one
// seeded generator consumed in event order, so a (scenario, seed) pair always
// produces the same transcript.

#include "cookiescan/packet.hpp"
#include "cookiescan/types.hpp"

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace cookiescan::sim {

enum class BehaviorKind : std::uint8_t {
    Normal,
    ZeroWindow,
    Shunning,
    MidHandshakeDrop,
    AckBlocked,
    ProbeStarver,
    Closed,
};
std::string_view to_string(BehaviorKind k);
std::optional<BehaviorKind> behavior_from_string(std::string_view s);

struct Behavior {
    BehaviorKind kind = BehaviorKind::Normal;
    /// Application bytes a responding endpoint sends once it sees our probe.
    std::string banner = "HTTP/1.1 200 OK\r\nServer: simnet\r\nContent-Length: 0\r\n\r\n";
    unsigned segments = 1;
    /// SYN-ACK retransmissions; overrides EndpointTiming when set.
    std::optional<unsigned> synack_retx;
};

struct PopulationEntry {
    double fraction = 1.0;
    Behavior behavior;
};

struct LinkModel {
    double loss_to_target = 0.0;
    double loss_from_target = 0.0;
    /// Extra loss applied only to our SYNs.
    double loss_syn = 0.0;
    double dup_prob = 0.0;
    double latency_min_ms = 10.0;
    double latency_max_ms = 10.0;
};

struct EndpointTiming {
    unsigned synack_retries = 3;
    unsigned data_retries = 3;
    double rto = 1.0;
    std::uint16_t window = 65535;
};

struct Scenario {
    std::uint64_t seed = 1;
    LinkModel link;
    EndpointTiming timing;
    /// Fractions may sum to less than 1; the remainder is silent (no host).
    std::vector<PopulationEntry> population;

    /// Throws std::invalid_argument on inconsistent fractions or probabilities.
    void validate() const;
    /// Scenario where every target has the same behavior.
    static Scenario uniform(BehaviorKind kind, std::uint64_t seed = 1);
};

/// Parses the YAML scenario schema (see scenarios/example.yaml).
/// Throws std::invalid_argument with a readable message.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);

struct TimedFrame {
    Bytes frame;
    Timestamp at = 0.0;
};

/// Endpoint population. `deliver` feeds one scanner frame to the addressed
/// target and returns what that target transmits in response (send times,
/// before link effects). Timers come back through `take_timers`.
class World {
public:
    explicit World(Scenario scenario);

    /// nullptr for targets that have no host behind them.
    const Behavior* behavior_for(const Endpoint& target) const;

    std::vector<TimedFrame> deliver(std::span<const std::uint8_t> frame, Timestamp now);

    struct Timer {
        QuadKey conn; // scanner -> target direction
        std::uint64_t generation = 0;
        Timestamp at = 0.0;
    };
    std::vector<Timer> take_timers();
    std::vector<TimedFrame> fire(const Timer& t);

    const Scenario& scenario() const { return scenario_; }
    std::size_t open_connections() const { return conns_.size(); }
    /// True once `target` has started ignoring SYNs from `source`.
    bool shuns(const Endpoint& target, Ipv4 source) const { return shunned_.count({target, source.value}) != 0; }

private:
    enum class State { SynRcvd, Established };
    struct Conn {
        State state = State::SynRcvd;
        std::uint32_t isn = 0;
        std::uint32_t irs = 0; // scanner's initial sequence number
        std::uint32_t rcv_nxt = 0;
        std::uint16_t peer_window = 0;
        unsigned synack_sent = 0;
        unsigned data_sent = 0;
        bool data_seen = false;
        std::uint64_t generation = 0;
        const Behavior* behavior = nullptr;
    };

    void arm(const QuadKey& key, Conn& c, Timestamp at);
    Bytes synack(const QuadKey& key, const Conn& c) const;
    std::vector<Bytes> banner_segments(const QuadKey& key, const Conn& c) const;
    unsigned synack_budget(const Conn& c) const;
    void abandon(const QuadKey& key, const Conn& c);

    Scenario scenario_;
    std::vector<double> cumulative_;
    std::unordered_map<QuadKey, Conn, QuadKeyHash> conns_;
    std::set<std::pair<Endpoint, std::uint32_t>> shunned_;
    std::vector<Timer> pending_timers_;
    std::uint16_t ip_id_ = 1;
};

/// What the scan driver sees from the event loop.
struct Wake {
    std::uint64_t token = 0;
};
struct Arrival {
    Bytes frame;
};
using NetEvent = std::variant<Wake, Arrival>;

struct LinkCounters {
    std::uint64_t to_target = 0;
    std::uint64_t to_target_dropped = 0;
    std::uint64_t from_target = 0;
    std::uint64_t from_target_dropped = 0;
    std::uint64_t duplicated = 0;
};

/// Discrete-event loop on a virtual clock joining the scanner to a World
/// through the link model.
class SimNetwork {
public:
    explicit SimNetwork(Scenario scenario);

    Timestamp now() const { return now_; }

    /// Scanner transmit at the current virtual time.
    void send(std::span<const std::uint8_t> frame);
    /// Ask for a Wake carrying `token` at time `at` (clamped to now).
    void schedule_wake(Timestamp at, std::uint64_t token);

    /// Advances the clock to the next scanner-visible event, running endpoint
    /// deliveries and timers on the way. nullopt once nothing is pending.
    std::optional<NetEvent> next();

    /// Observes every frame the scanner transmits, before loss.
    std::function<void(Timestamp, std::span<const std::uint8_t>)> tap;
    /// Observes every frame a target transmits, before loss.
    std::function<void(Timestamp, std::span<const std::uint8_t>)> target_tap;
    /// Extra loss on the scanner's side: return true to drop the frame.
    std::function<bool(Timestamp, std::span<const std::uint8_t>)> drop_filter;

    World& world() { return world_; }
    const World& world() const { return world_; }
    const LinkCounters& counters() const { return counters_; }

private:
    enum class Kind : std::uint8_t { Wake, ToScanner, ToTarget, Timer };
    struct Item {
        Timestamp at;
        std::uint64_t seq;
        Kind kind;
        std::uint64_t token; // wake token or payload index
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    void push(Timestamp at, Kind kind, std::uint64_t token);
    double latency();
    bool chance(double p);
    void transmit_from_target(TimedFrame f);
    void schedule_timers();

    World world_;
    std::mt19937_64 rng_;
    Timestamp now_ = 0.0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Item, std::vector<Item>, Later> queue_;
    std::unordered_map<std::uint64_t, Bytes> frames_;
    std::unordered_map<std::uint64_t, World::Timer> timers_;
    std::uint64_t next_slot_ = 0;
    LinkCounters counters_;
};

} // namespace cookiescan::sim
