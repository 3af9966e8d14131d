#pragma once

// Run orchestration: wires one sender, one receiver (engine) and a
// transport together and streams events to a sink.

#include "cookiescan/engine.hpp"
#include "cookiescan/output.hpp"
#include "cookiescan/sender.hpp"
#include "cookiescan/simnet.hpp"
#include "cookiescan/targets.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cookiescan {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TransportKind { Sim, Live };

struct ProbeSpec {
    std::string name = "http-get";
    std::map<std::string, std::string> args;
};

struct ScanConfig {
    std::vector<Cidr> targets;
    std::vector<std::uint16_t> ports;
    std::vector<Cidr> exclude;
    double rate = 10000.0;
    std::vector<ProbeSpec> probes{ProbeSpec{}};
    std::uint32_t retries = 1;
    double inter_attempt_gap = 1.0;
    double cooldown = 10.0;
    std::optional<std::uint64_t> seed;
    TransportKind transport = TransportKind::Sim;
    std::string scenario_path;
    std::string interface;
    Ipv4 source_ip{10, 0, 0, 1};
    PortRange source_ports;
    bool live_opt_in = false;
    std::string output = "-";
    std::uint16_t window = 1024;
    std::size_t dedup_capacity = DedupWindow::kDefaultCapacity;
    double dedup_horizon = DedupWindow::kDefaultHorizon;
    std::size_t banner_cap = 4096;
    std::size_t callback_capacity = CallbackQueue::kDefaultCapacity;
    bool report_unsolicited = false;
};

/// Throws ConfigError describing the first problem found.
void validate(const ScanConfig& cfg);

/// Registry holding the configured probes, frozen. Throws ConfigError.
ProbeRegistry build_registry(const ScanConfig& cfg);

SenderConfig make_sender_config(const ScanConfig& cfg, std::uint64_t seed);
EngineConfig make_engine_config(const ScanConfig& cfg);

/// Targets minus exclusions.
TargetSpace build_target_space(const ScanConfig& cfg);

struct SimHooks {
    /// Every frame the sender hands to the network, with the decision that produced it.
    std::function<void(Timestamp, const Action&)> on_transmit;
    std::function<void(const ScanEvent&)> on_event;
    /// Called after each inbound packet with the engine's current footprint.
    std::function<void(const Engine&)> on_engine;
    /// Install a tap on the network before the run starts.
    std::function<void(sim::SimNetwork&)> on_network;
};

struct RunResult {
    RunStats stats;
    EngineCounters engine;
    sim::LinkCounters link;
};

/// Runs the scan against the simulated network on a virtual clock.
RunResult run_sim(const ScanConfig& cfg, const sim::Scenario& scenario, NdjsonSink& sink, const SimHooks& hooks = {});

/// Runs the scan on a raw-socket interface with one sender and one receiver thread.
RunResult run_live(const ScanConfig& cfg, NdjsonSink& sink);

} // namespace cookiescan
