#include "cookiescan/output.hpp"

#include "json.hpp"
#include <sodium.h>

#include <iomanip>

namespace cookiescan {

using ordered_json = nlohmann::ordered_json;

std::string base64_encode(std::span<const std::uint8_t> data) {
    if (data.empty()) return {};
    const std::size_t cap = sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(cap, '\0');
    sodium_bin2base64(out.data(), cap, data.data(), data.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(cap - 1); // drop the terminator
    return out;
}

std::string event_to_ndjson(const ScanEvent& e, const ProbeRegistry& probes) {
    ordered_json j;
    j["ts"] = e.ts;
    j["ip"] = e.quad.dst_ip.to_string();
    j["port"] = e.quad.dst_port;
    j["event"] = std::string(to_string(e.kind));
    j["probe"] = std::string(probes.name_of(e.probe_type));
    j["len"] = e.payload.size();
    j["data_b64"] = base64_encode(e.payload);
    if (e.report) {
        ordered_json r = ordered_json::object();
        for (const auto& [k, v] : e.report->fields)
            std::visit([&, &key = k](const auto& x) { r[key] = x; }, v);
        j["report"] = std::move(r);
    } else {
        j["report"] = nullptr;
    }
    // Banner bytes are arbitrary; never fail on invalid UTF-8 in report strings.
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string stats_to_ndjson(const RunStats& s) {
    ordered_json st;
    st["sent_syn"] = s.sent_syn;
    st["sent_reply"] = s.sent_reply;
    st["received"] = s.received;
    st["port_hits"] = s.port_hits;
    st["banners"] = s.banners;
    st["zero_windows"] = s.zero_windows;
    st["closed"] = s.closed;
    st["unsolicited"] = s.unsolicited;
    st["dedup_drops"] = s.dedup_drops;
    st["callback_overflows"] = s.callback_overflows;
    st["parse_rejects"] = s.parse_rejects;
    st["probe_faults"] = s.probe_faults;
    st["blocked_transmits"] = s.blocked_transmits;
    st["elapsed"] = s.elapsed;
    st["peak_engine_bytes"] = s.peak_engine_bytes;
    ordered_json j;
    j["stats"] = std::move(st);
    return j.dump();
}

void print_summary(std::ostream& os, const RunStats& s) {
    os << "scan finished in " << std::fixed << std::setprecision(2) << s.elapsed << " s\n"
       << "  sent: " << s.sent_syn << " syn, " << s.sent_reply << " replies\n"
       << "  received: " << s.received << " (" << s.parse_rejects << " rejected)\n"
       << "  port hits: " << s.port_hits << ", banners: " << s.banners << ", zero-window: " << s.zero_windows
       << ", closed: " << s.closed << "\n"
       << "  unsolicited: " << s.unsolicited << ", dedup drops: " << s.dedup_drops
       << ", callback overflows: " << s.callback_overflows << "\n"
       << "  engine memory: " << s.peak_engine_bytes << " bytes\n";
    os.unsetf(std::ios::floatfield);
}

} // namespace cookiescan
