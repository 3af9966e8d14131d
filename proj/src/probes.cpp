#include "cookiescan/probes.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace cookiescan {

namespace {

std::string_view as_text(std::span<const std::uint8_t> bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

const Report::Value* Report::find(std::string_view key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return &v;
    return nullptr;
}

Report NullProbe::handle_response(const Endpoint&, std::span<const std::uint8_t>) const {
    Report r;
    r.add("protocol", std::string("unknown"));
    return r;
}

HttpGetProbe::HttpGetProbe(std::string user_agent, std::string path)
    : user_agent_(std::move(user_agent)), path_(std::move(path)) {
    auto has_ctl = [](const std::string& s) {
        return std::any_of(s.begin(), s.end(), [](char c) { return c == '\r' || c == '\n'; });
    };
    if (has_ctl(user_agent_) || has_ctl(path_) || path_.empty())
        throw std::invalid_argument("http-get: user_agent/path must be non-empty single-line values");
}

Bytes HttpGetProbe::make_payload(const Endpoint& target) const {
    std::string req;
    req.reserve(96 + user_agent_.size() + path_.size());
    req += "GET ";
    req += path_;
    req += " HTTP/1.1\r\nHost: ";
    req += target.ip.to_string();
    req += "\r\nUser-Agent: ";
    req += user_agent_;
    req += "\r\nAccept: */*\r\nConnection: close\r\n\r\n";
    return {req.begin(), req.end()};
}

std::size_t HttpGetProbe::max_payload_len() const {
    return make_payload({Ipv4{255, 255, 255, 255}, 65535}).size();
}

Report HttpGetProbe::handle_response(const Endpoint&, std::span<const std::uint8_t> banner) const {
    return classify_http_banner(banner);
}

Report classify_http_banner(std::span<const std::uint8_t> banner) {
    Report unknown;
    unknown.add("protocol", std::string("unknown"));

    std::string_view text = as_text(banner);
    const auto eol = text.find("\r\n");
    const std::string_view status_line = text.substr(0, eol);

    // HTTP-version SP 3DIGIT [SP reason]
    if (status_line.size() < 12 || status_line.substr(0, 5) != "HTTP/") return unknown;
    const auto sp = status_line.find(' ');
    if (sp == std::string_view::npos || sp < 6) return unknown;
    const std::string_view version = status_line.substr(5, sp - 5);
    if (version.size() != 3 || !std::isdigit(static_cast<unsigned char>(version[0])) || version[1] != '.' ||
        !std::isdigit(static_cast<unsigned char>(version[2])))
        return unknown;
    const std::string_view code = status_line.substr(sp + 1, 3);
    if (code.size() != 3 || !std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return unknown;
    if (status_line.size() > sp + 4 && status_line[sp + 4] != ' ') return unknown;

    int status = 0;
    std::from_chars(code.data(), code.data() + 3, status);

    Report r;
    r.add("protocol", std::string("http"));
    r.add("status", std::int64_t{status});

    if (eol != std::string_view::npos) {
        std::string_view rest = text.substr(eol + 2);
        while (!rest.empty()) {
            const auto next = rest.find("\r\n");
            const std::string_view line = rest.substr(0, next);
            if (line.empty()) break;
            const auto colon = line.find(':');
            if (colon != std::string_view::npos && iequals(line.substr(0, colon), "server")) {
                r.add("server", std::string(trim(line.substr(colon + 1))));
                break;
            }
            if (next == std::string_view::npos) break;
            rest.remove_prefix(next + 2);
        }
    }
    return r;
}

RawHexProbe::RawHexProbe(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("raw-hex: odd number of hex digits");
    payload_.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = hex_digit(hex[i]);
        const int lo = hex_digit(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("raw-hex: invalid hex digit");
        payload_.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
}

Report RawHexProbe::handle_response(const Endpoint&, std::span<const std::uint8_t> banner) const {
    return classify_http_banner(banner);
}

std::uint8_t ProbeRegistry::add(std::shared_ptr<const ProbeModule> probe) {
    if (frozen_) throw std::logic_error("probe registry is frozen");
    if (!probe) throw std::invalid_argument("null probe module");
    if (count_ >= kMaxProbeTypes) throw std::length_error("at most 16 probe modules per run");
    if (probe->max_payload_len() > kMaxContentLen)
        throw std::length_error("probe '" + std::string(probe->name()) + "' payload can exceed " +
                                std::to_string(kMaxContentLen) + " bytes");
    slots_[count_] = std::move(probe);
    return static_cast<std::uint8_t>(count_++);
}

std::string_view ProbeRegistry::name_of(std::uint8_t probe_type) const {
    const auto* p = get(probe_type);
    return p ? p->name() : std::string_view{};
}

std::shared_ptr<const ProbeModule> make_builtin_probe(std::string_view name,
                                                      const std::map<std::string, std::string>& args) {
    auto reject_unknown = [&](std::initializer_list<std::string_view> allowed) {
        for (const auto& [k, v] : args)
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw std::invalid_argument("probe '" + std::string(name) + "': unknown argument '" + k + "'");
    };
    if (name == "null") {
        reject_unknown({});
        return std::make_shared<NullProbe>();
    }
    if (name == "http-get") {
        reject_unknown({"user_agent", "path"});
        auto ua = args.count("user_agent") ? args.at("user_agent") : std::string(HttpGetProbe::kDefaultUserAgent);
        auto path = args.count("path") ? args.at("path") : std::string("/");
        return std::make_shared<HttpGetProbe>(std::move(ua), std::move(path));
    }
    if (name == "raw-hex") {
        reject_unknown({"hex"});
        if (!args.count("hex")) throw std::invalid_argument("raw-hex requires hex=<bytes>");
        return std::make_shared<RawHexProbe>(args.at("hex"));
    }
    throw std::invalid_argument("unknown probe '" + std::string(name) + "'");
}

std::pair<std::string, std::map<std::string, std::string>> parse_probe_spec(std::string_view spec) {
    const auto colon = spec.find(':');
    std::pair<std::string, std::map<std::string, std::string>> out;
    out.first = std::string(spec.substr(0, colon));
    if (out.first.empty()) throw std::invalid_argument("empty probe name");
    if (colon == std::string_view::npos) return out;
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const std::string_view kv = rest.substr(0, semi);
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw std::invalid_argument("probe argument must be key=value: '" + std::string(kv) + "'");
        out.second[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
        if (semi == std::string_view::npos) break;
        rest.remove_prefix(semi + 1);
    }
    return out;
}

} // namespace cookiescan
