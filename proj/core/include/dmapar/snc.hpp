#pragma once

#include "dmapar/envelope.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dmapar {

enum class EnvelopeKind { Arrival, Service };

// Pointwise (sigma, rho) values over a shared theta grid. Service envelopes
// hold (sigma_S(-theta), rho_S(-theta)). Units: bytes, bytes/second.
// When `eval` is set the envelope can be evaluated off-grid, which the
// bound search uses for refinement.
struct SigmaRhoEnvelope {
    EnvelopeKind kind = EnvelopeKind::Arrival;
    std::vector<SigmaRhoPoint> points;
    std::string label;
    double dt = 0.0;  // slot length used in the exponent terms; 0 = not bound yet
    bool deterministic = false;  // constant-rate service with sigma = 0
    std::vector<std::string> notes;
    std::function<SigmaRhoPoint(double)> eval;

    std::vector<double> grid() const;
};

SigmaRhoEnvelope arrival_envelope(const DMaparHmm& model, const std::vector<double>& theta_grid,
                                  const RConfig& r = {}, const std::string& label = "");

// c in bits/second.
SigmaRhoEnvelope constant_rate_service(double c_bits, const std::vector<double>& theta_grid,
                                       const std::string& label = "");

SigmaRhoEnvelope aggregate(const SigmaRhoEnvelope& a1, const SigmaRhoEnvelope& a2);
SigmaRhoEnvelope leftover(const SigmaRhoEnvelope& s, const SigmaRhoEnvelope& cross);

struct ConcatOptions {
    double delta = 1e-3;  // relative rate slack for equal rates
    double dt_ref = 0.0;  // used when neither input carries a slot length
};

SigmaRhoEnvelope concatenate(const SigmaRhoEnvelope& s1, const SigmaRhoEnvelope& s2,
                             const ConcatOptions& opts = {});

// Departure envelope of `arrival` through `service`.
SigmaRhoEnvelope output_envelope(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service);

struct ServerSpec {
    std::string id;
    double rate_bits = 0.0;
    int queues = 2;
};

struct FlowSpec {
    std::string id;
    std::vector<std::string> path;
    int priority = 0;
    std::string source;       // model or trace file, resolved by the caller
    std::string source_kind;  // "model" | "trace" | ""
};

struct TopologySpec {
    std::vector<ServerSpec> servers;
    std::vector<FlowSpec> flows;

    const ServerSpec& server(const std::string& id) const;
    const FlowSpec& flow(const std::string& id) const;
    // Validates references and feed-forwardness; returns servers in topological order.
    std::vector<std::string> validate() const;
};

struct PmooOptions {
    double delta = 1e-3;
    bool subtract_equal_priority = true;
    double max_packet_bytes = 0.0;  // > 0 adds 2 * L_max to each hop's sigma
};

SigmaRhoEnvelope pmoo_e2e(const TopologySpec& topo, const std::string& flow_id,
                          const std::map<std::string, SigmaRhoEnvelope>& arrivals,
                          const PmooOptions& opts = {});

// Same reduction with every cross flow subtracted hop by hop.
SigmaRhoEnvelope hop_by_hop_e2e(const TopologySpec& topo, const std::string& flow_id,
                                const std::map<std::string, SigmaRhoEnvelope>& arrivals,
                                const PmooOptions& opts = {});

struct BoundResult {
    double value = 0.0;  // seconds (delay) or bytes (backlog)
    double theta_star = 0.0;
    double grid_value = 0.0;
    std::size_t valid_points = 0;
    std::size_t evaluations = 0;
    bool refined = false;
};

BoundResult delay_bound(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service, double epsilon);
BoundResult backlog_bound(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service, double epsilon);

// Per-point bound terms; +inf when unstable.
double delay_at(const SigmaRhoPoint& a, const SigmaRhoPoint& s, double dt, double epsilon);
double backlog_at(const SigmaRhoPoint& a, const SigmaRhoPoint& s, double dt, double epsilon);

// 64-point log grid over [1e-6, 10] / mean_burst_bytes.
std::vector<double> default_theta_grid(double mean_burst_bytes, std::size_t n = 64);
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace dmapar
