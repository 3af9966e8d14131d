#include "cookiescan/live.hpp"
#include "cookiescan/scan.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace cookiescan;

namespace {

std::vector<Cidr> read_cidr_file(const std::string& path) {
    if (path == "-") return read_cidr_list(std::cin);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return read_cidr_list(in);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

PortRange parse_port_range(const std::string& text) {
    const auto ports = parse_port_list(text);
    if (ports.back() - ports.front() + 1u != ports.size()) throw ConfigError("source ports must be one range");
    return {ports.front(), ports.back()};
}

struct Args {
    std::vector<std::string> targets;
    std::string targets_file;
    std::string ports;
    std::vector<std::string> exclude;
    std::string exclude_file;
    std::vector<std::string> probes;
    std::string transport = "sim";
    std::string source_ip = "10.0.0.1";
    std::string source_ports = "32768-61000";
    std::optional<std::uint64_t> seed;
    bool live = false;
};

ScanConfig to_config(const Args& a, ScanConfig cfg) {
    try {
        for (const auto& t : a.targets) {
            auto v = parse_cidr_list(t);
            cfg.targets.insert(cfg.targets.end(), v.begin(), v.end());
        }
        if (!a.targets_file.empty()) {
            auto v = read_cidr_file(a.targets_file);
            cfg.targets.insert(cfg.targets.end(), v.begin(), v.end());
        }
        cfg.ports = parse_port_list(a.ports);
        for (const auto& x : a.exclude) {
            auto v = parse_cidr_list(x);
            cfg.exclude.insert(cfg.exclude.end(), v.begin(), v.end());
        }
        if (!a.exclude_file.empty()) {
            auto v = read_cidr_file(a.exclude_file);
            cfg.exclude.insert(cfg.exclude.end(), v.begin(), v.end());
        }
        if (!a.probes.empty()) {
            cfg.probes.clear();
            for (const auto& p : a.probes) {
                auto [name, args] = parse_probe_spec(p);
                cfg.probes.push_back({name, args});
            }
        }
        const auto src = Ipv4::parse(a.source_ip);
        if (!src) throw ConfigError("invalid source address '" + a.source_ip + "'");
        cfg.source_ip = *src;
        cfg.source_ports = parse_port_range(a.source_ports);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    cfg.seed = a.seed;
    cfg.transport = a.transport == "live" ? TransportKind::Live : TransportKind::Sim;
    cfg.live_opt_in = a.live && live_opt_in_from_env();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stateless TCP banner scanner"};
    app.require_subcommand(1);
    auto* scan = app.add_subcommand("scan", "Scan targets and write NDJSON events");

    Args a;
    ScanConfig cfg;
    scan->add_option("-t,--targets", a.targets, "Target CIDRs, comma separated (repeatable)");
    scan->add_option("--targets-file", a.targets_file, "File with one CIDR per line ('-' for stdin)");
    scan->add_option("-p,--ports", a.ports, "Ports and ranges, e.g. 80,443,8000-8100")->required();
    scan->add_option("--exclude", a.exclude, "CIDRs never to send to (repeatable)");
    scan->add_option("--exclude-file", a.exclude_file, "File with excluded CIDRs");
    scan->add_option("-r,--rate", cfg.rate, "SYNs per second")->capture_default_str();
    scan->add_option("--probe", a.probes, "Probe module name[:key=value;...] (repeatable; default http-get)");
    scan->add_option("--retries", cfg.retries, "Passes over the target space")->capture_default_str();
    scan->add_option("--gap", cfg.inter_attempt_gap, "Seconds between passes")->capture_default_str();
    scan->add_option("--cooldown", cfg.cooldown, "Seconds to keep answering after the last SYN")->capture_default_str();
    scan->add_option("--seed", a.seed, "Permutation and hash seed (sim default: scenario seed)");
    scan->add_option("--transport", a.transport, "sim or live")
        ->check(CLI::IsMember({"sim", "live"}))
        ->capture_default_str();
    scan->add_option("--scenario", cfg.scenario_path, "Scenario YAML for the sim transport")
        ->check(CLI::ExistingFile);
    scan->add_option("-i,--interface", cfg.interface, "Interface for the live transport");
    scan->add_option("--source-ip", a.source_ip, "Source address of our segments")->capture_default_str();
    scan->add_option("--source-ports", a.source_ports, "Source port range lo-hi")->capture_default_str();
    scan->add_flag("--live", a.live, "Allow live sending (also needs COOKIESCAN_LIVE_ACK=1)");
    scan->add_option("-o,--output", cfg.output, "NDJSON output file ('-' for stdout)")->capture_default_str();
    scan->add_option("--window", cfg.window, "Advertised receive window")->capture_default_str();
    scan->add_option("--dedup-capacity", cfg.dedup_capacity, "Duplicate filter entries")->capture_default_str();
    scan->add_option("--dedup-horizon", cfg.dedup_horizon, "Duplicate filter horizon, seconds")->capture_default_str();
    scan->add_option("--banner-cap", cfg.banner_cap, "Bytes of banner kept per event")->capture_default_str();
    scan->add_flag("--report-unsolicited", cfg.report_unsolicited, "Emit events for segments we did not solicit");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg = to_config(a, cfg);
        validate(cfg);
        const ProbeRegistry registry = build_registry(cfg);

        std::ofstream file;
        if (cfg.output != "-") {
            file.open(cfg.output);
            if (!file) throw ConfigError("cannot write '" + cfg.output + "'");
        }
        std::ostream& out = cfg.output == "-" ? std::cout : file;
        NdjsonSink sink(out, registry);

        RunResult r;
        if (cfg.transport == TransportKind::Sim) {
            const auto scenario = sim::load_scenario(cfg.scenario_path);
            r = run_sim(cfg, scenario, sink);
        } else {
            r = run_live(cfg, sink);
        }
        print_summary(std::cerr, r.stats);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "cookiescan: " << e.what() << "\n";
        return 2;
    } catch (const LiveError& e) {
        std::cerr << "cookiescan: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "cookiescan: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "cookiescan: " << e.what() << "\n";
        return 1;
    }
}
