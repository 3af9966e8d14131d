#pragma once

#include "cookiescan/engine.hpp"
#include "cookiescan/probes.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <string>

namespace cookiescan {

struct RunStats {
    std::uint64_t sent_syn = 0;
    std::uint64_t sent_reply = 0;
    std::uint64_t received = 0;
    std::uint64_t port_hits = 0;
    std::uint64_t banners = 0;
    std::uint64_t zero_windows = 0;
    std::uint64_t closed = 0;
    std::uint64_t unsolicited = 0;
    std::uint64_t dedup_drops = 0;
    std::uint64_t callback_overflows = 0;
    std::uint64_t parse_rejects = 0;
    std::uint64_t probe_faults = 0;
    std::uint64_t blocked_transmits = 0;
    double elapsed = 0.0;
    std::size_t peak_engine_bytes = 0;
};

std::string base64_encode(std::span<const std::uint8_t> data);

/// One NDJSON line (no trailing newline) with keys in the fixed order
/// ts, ip, port, event, probe, len, data_b64, report.
std::string event_to_ndjson(const ScanEvent& e, const ProbeRegistry& probes);

/// Final line: {"stats": {...}}.
std::string stats_to_ndjson(const RunStats& s);

/// Human-readable summary for the diagnostic stream.
void print_summary(std::ostream& os, const RunStats& s);

/// Line-oriented writer for the machine output stream.
class NdjsonSink {
public:
    NdjsonSink(std::ostream& out, const ProbeRegistry& probes) : out_(out), probes_(probes) {}

    void write(const ScanEvent& e) { out_ << event_to_ndjson(e, probes_) << '\n'; }
    void write(const RunStats& s) { out_ << stats_to_ndjson(s) << '\n'; }
    void flush() { out_.flush(); }

private:
    std::ostream& out_;
    const ProbeRegistry& probes_;
};

} // namespace cookiescan
