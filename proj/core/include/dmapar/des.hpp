#pragma once

#include "dmapar/snc.hpp"
#include "dmapar/trace.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dmapar {

struct Packet {
    double time = 0.0;  // seconds
    double size = 0.0;  // bytes
};

// Each non-empty slot k becomes packets at time k*dt; mtu > 0 splits them.
std::vector<Packet> packets_from_slots(const DiscretizedTrace& slots, double mtu = 0.0);
std::vector<Packet> packets_from_trace(const TraceSeries& trace, double mtu = 0.0);

struct SimConfig {
    std::uint64_t seed = 0;        // recorded only; sources are given
    bool record_packets = false;
};

struct PacketRecord {
    double arrival = 0.0;
    double departure = 0.0;
    double size = 0.0;
};

struct SimResult {
    std::map<std::string, std::vector<double>> delays;           // per flow, seconds
    std::map<std::string, std::vector<PacketRecord>> packets;     // when recorded
    std::map<std::string, std::vector<double>> backlog;           // per server, bytes seen at arrivals
    std::map<std::string, std::vector<double>> flow_backlog;      // per flow, bytes in network at its arrivals
    std::uint64_t seed = 0;
    double duration = 0.0;       // last departure time
    std::size_t injected = 0;
    std::size_t departed = 0;
    double max_server_busy_fraction = 0.0;
};

// Feed-forward network of constant-rate, non-preemptive strict-priority
// servers with FIFO queues and zero propagation delay.
SimResult simulate(const TopologySpec& topo, const std::map<std::string, std::vector<Packet>>& sources,
                   const SimConfig& cfg = {});

// ceil((1-eps) n)-th order statistic. With the guard on, needs n >= 10/eps.
double empirical_quantile(std::vector<double> samples, double epsilon, bool guard = true);

struct Comparison {
    double bound = 0.0;
    double quantile = 0.0;
    bool reliable = false;
    double tightness = 0.0;
};

Comparison compare_bound(const std::vector<double>& samples, double bound, double epsilon);
Comparison compare_bound(const SimResult& result, const std::string& flow_id, double bound, double epsilon);

}  // namespace dmapar
