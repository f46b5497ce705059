#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dmapar {

struct TraceRecord {
    double timestamp = 0.0;  // seconds
    double size = 0.0;       // bytes
};

struct TraceSeries {
    std::vector<TraceRecord> records;  // sorted by timestamp
    std::string flow_id;
};

// Per-slot byte counts; slot t (1-based) covers ((t-1)dt, t dt] after the
// first timestamp.
struct DiscretizedTrace {
    std::vector<double> a;
    double dt = 0.0;
};

struct DemodulatedTrace {
    std::vector<double> y;              // non-zero slot amounts in order
    std::vector<std::uint64_t> tau_on;  // on-run lengths (slots)
    std::vector<std::uint64_t> tau_off; // off-run lengths (slots)
    bool first_on = false;              // whether the series starts with an on run
};

TraceSeries load_trace(const std::string& path);
TraceSeries parse_trace(std::istream& in, const std::string& flow_id = "");
// One record per non-empty slot, stamped at the slot end.
void write_trace_csv(std::ostream& out, const DiscretizedTrace& disc);

double default_dt(const TraceSeries& trace);
DiscretizedTrace discretize(const TraceSeries& trace, double dt);
DemodulatedTrace demodulate(const DiscretizedTrace& disc);
DiscretizedTrace remodulate(const DemodulatedTrace& demod, double dt);

// Aggregated-variance Hurst estimate.
double hurst(std::span<const double> series);
// Population standard deviation over mean.
double cv(std::span<const double> series);

}  // namespace dmapar
