#pragma once

// Receiver side of the stateless scan. Every inbound segment is classified
// from its acknowledgment number alone; the only mutable state is the
// bounded dedup window and a set of counters.

#include "cookiescan/cookie.hpp"
#include "cookiescan/dedup.hpp"
#include "cookiescan/packet.hpp"
#include "cookiescan/probes.hpp"
#include "cookiescan/types.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace cookiescan {

enum class EventKind : std::uint8_t { Open, OpenZeroWindow, Closed, Banner, Unsolicited };
std::string_view to_string(EventKind k);

struct ScanEvent {
    EventKind kind = EventKind::Unsolicited;
    /// Normalized so that dst_ip:dst_port is the target.
    QuadKey quad;
    std::uint8_t probe_type = 0;
    Bytes payload;
    std::optional<Report> report;
    Timestamp ts = 0.0;

    Endpoint target() const { return quad.dst(); }
};

struct Reply {
    Bytes frame;
};

struct EngineConfig {
    BuildParams build;
    std::size_t banner_cap = 4096;
    /// Emit an Unsolicited event per unmatched segment instead of only counting it.
    bool report_unsolicited = false;
};

struct EngineCounters {
    std::uint64_t handled = 0;
    std::uint64_t open = 0;
    std::uint64_t zero_window = 0;
    std::uint64_t closed = 0;
    std::uint64_t banners = 0;
    std::uint64_t unsolicited = 0;
    std::uint64_t bare_acks = 0;
    std::uint64_t dedup_drops = 0;
    /// Data segments whose SYN-ACK fell outside the dedup horizon.
    std::uint64_t late_data = 0;
    std::uint64_t probe_faults = 0;
};

/// Which decision branch handled a segment.
enum class Branch : std::uint8_t { Closed, ZeroWindow, Open, Banner, BareAck, Unsolicited, Duplicate, Late, Fault };

class Engine {
public:
    Engine(const ProbeRegistry& probes, const HashSecret& secret, DedupWindow dedup, EngineConfig cfg = {});

    /// Classifies one segment addressed to us, appending at most one event
    /// and at most one reply.
    Branch handle_packet(const PacketView& pv, std::vector<ScanEvent>& events, std::vector<Reply>& replies);

    const EngineCounters& counters() const { return counters_; }
    const DedupWindow& dedup() const { return dedup_; }
    /// Bytes owned by the engine: dedup storage plus fixed-size members.
    std::size_t memory_bytes() const { return sizeof(*this) - sizeof(dedup_) + dedup_.memory_bytes(); }

private:
    Branch on_synack(const PacketView& pv, const Cookie& c, std::uint32_t cookie32, std::vector<ScanEvent>& events,
                     std::vector<Reply>& replies);
    Branch on_data(const PacketView& pv, const Cookie& c, std::uint32_t cookie32, std::vector<ScanEvent>& events,
                   std::vector<Reply>& replies);
    Branch unsolicited(const PacketView& pv, std::vector<ScanEvent>& events);

    const ProbeRegistry& probes_;
    HashSecret secret_;
    DedupWindow dedup_;
    EngineConfig cfg_;
    EngineCounters counters_;
};

} // namespace cookiescan
