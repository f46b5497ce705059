#include "dmapar/des.hpp"

#include "dmapar/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dmapar {

namespace {

void push_split(std::vector<Packet>& out, double t, double bytes, double mtu) {
    if (!(bytes > 0.0)) return;
    if (mtu <= 0.0) {
        out.push_back({t, bytes});
        return;
    }
    double left = bytes;
    while (left > mtu) {
        out.push_back({t, mtu});
        left -= mtu;
    }
    if (left > 1e-9) out.push_back({t, left});
}

}  // namespace

std::vector<Packet> packets_from_slots(const DiscretizedTrace& slots, double mtu) {
    require(slots.dt > 0.0, ErrorCode::InvalidDt, "slot series needs dt > 0");
    require(mtu >= 0.0, ErrorCode::InvalidArgument, "mtu must be non-negative");
    std::vector<Packet> out;
    for (std::size_t k = 0; k < slots.a.size(); ++k)
        push_split(out, static_cast<double>(k) * slots.dt, slots.a[k], mtu);
    return out;
}

std::vector<Packet> packets_from_trace(const TraceSeries& trace, double mtu) {
    require(mtu >= 0.0, ErrorCode::InvalidArgument, "mtu must be non-negative");
    std::vector<Packet> out;
    if (trace.records.empty()) return out;
    double t0 = trace.records.front().timestamp;
    for (const auto& r : trace.records) push_split(out, r.timestamp - t0, r.size, mtu);
    return out;
}

SimResult simulate(const TopologySpec& topo, const std::map<std::string, std::vector<Packet>>& sources,
                   const SimConfig& cfg) {
    const std::vector<std::string> order = topo.validate();
    SimResult res;
    res.seed = cfg.seed;
    const std::size_t nf = topo.flows.size();
    std::vector<std::vector<double>> now(nf), size(nf), born(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        const auto& fl = topo.flows[f];
        auto it = sources.find(fl.id);
        require(it != sources.end(), ErrorCode::InvalidArgument, "no packet source for flow '" + fl.id + "'");
        const auto& pk = it->second;
        for (std::size_t k = 0; k < pk.size(); ++k) {
            require(pk[k].size > 0.0, ErrorCode::InvalidArgument, "packet sizes must be positive");
            require(k == 0 || pk[k].time >= pk[k - 1].time, ErrorCode::InvalidArgument,
                    "packet times of flow '" + fl.id + "' must be non-decreasing");
            now[f].push_back(pk[k].time);
            size[f].push_back(pk[k].size);
        }
        born[f] = now[f];
        res.injected += pk.size();
    }

    struct Arr {
        double t;
        int prio;
        std::size_t flow;
        std::size_t seq;
    };
    double first_arrival = std::numeric_limits<double>::infinity(), last_departure = 0.0;
    for (const auto& sid : order) {
        const ServerSpec& srv = topo.server(sid);
        const double rate = srv.rate_bits / 8.0;
        std::vector<Arr> arrs;
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& path = topo.flows[f].path;
            if (std::find(path.begin(), path.end(), sid) == path.end()) continue;
            for (std::size_t k = 0; k < now[f].size(); ++k) arrs.push_back({now[f][k], topo.flows[f].priority, f, k});
        }
        std::sort(arrs.begin(), arrs.end(), [](const Arr& x, const Arr& y) {
            if (x.t != y.t) return x.t < y.t;
            if (x.prio != y.prio) return x.prio < y.prio;
            if (x.flow != y.flow) return x.flow < y.flow;
            return x.seq < y.seq;
        });
        auto& samples = res.backlog[sid];
        samples.reserve(arrs.size());
        std::vector<std::deque<std::size_t>> queues(static_cast<std::size_t>(srv.queues));
        double clock = 0.0, busy_until = -std::numeric_limits<double>::infinity(), queued = 0.0, busy_time = 0.0;
        std::size_t i = 0, waiting = 0;
        const std::size_t n = arrs.size();
        if (n > 0) first_arrival = std::min(first_arrival, arrs.front().t);
        for (std::size_t done = 0; done < n; ++done) {
            if (waiting == 0) clock = std::max(clock, arrs[i].t);
            while (i < n && arrs[i].t <= clock) {
                const Arr& a = arrs[i];
                double sz = size[a.flow][a.seq];
                double rem = busy_until > a.t ? (busy_until - a.t) * rate : 0.0;
                samples.push_back(queued + rem + sz);
                queues[static_cast<std::size_t>(a.prio)].push_back(i);
                queued += sz;
                ++waiting;
                ++i;
            }
            std::size_t pick = 0;
            for (std::size_t q = 0; q < queues.size(); ++q)
                if (!queues[q].empty()) {
                    pick = queues[q].front();
                    queues[q].pop_front();
                    break;
                }
            --waiting;
            const Arr& a = arrs[pick];
            double sz = size[a.flow][a.seq];
            queued -= sz;
            double service = sz / rate;
            clock += service;
            busy_time += service;
            busy_until = clock;
            now[a.flow][a.seq] = clock;
        }
        if (n > 0) {
            last_departure = std::max(last_departure, clock);
            double span = clock - arrs.front().t;
            if (span > 0.0) res.max_server_busy_fraction = std::max(res.max_server_busy_fraction, busy_time / span);
        }
    }

    for (std::size_t f = 0; f < nf; ++f) {
        const auto& id = topo.flows[f].id;
        auto& d = res.delays[id];
        d.resize(now[f].size());
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = now[f][k] - born[f][k];
        res.departed += d.size();
        if (cfg.record_packets) {
            auto& recs = res.packets[id];
            recs.reserve(d.size());
            for (std::size_t k = 0; k < d.size(); ++k) recs.push_back({born[f][k], now[f][k], size[f][k]});
        }
        // Bytes of this flow inside the network at each of its arrival instants.
        std::vector<std::pair<double, double>> deps;
        deps.reserve(d.size());
        for (std::size_t k = 0; k < d.size(); ++k) deps.emplace_back(now[f][k], size[f][k]);
        std::sort(deps.begin(), deps.end());
        auto& fb = res.flow_backlog[id];
        fb.reserve(d.size());
        double inside = 0.0;
        std::size_t j = 0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            inside += size[f][k];
            while (j < deps.size() && deps[j].first <= born[f][k]) inside -= deps[j++].second;
            fb.push_back(std::max(0.0, inside));
        }
    }
    res.duration = std::isfinite(first_arrival) ? last_departure : 0.0;
    return res;
}

double empirical_quantile(std::vector<double> samples, double epsilon, bool guard) {
    require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::InvalidArgument, "epsilon must be in (0,1)");
    const std::size_t n = samples.size();
    if (guard) {
        auto need = static_cast<std::size_t>(std::ceil(10.0 / epsilon - 1e-9));
        require(n >= need, ErrorCode::InsufficientSamples,
                "need at least " + std::to_string(need) + " samples for epsilon " + std::to_string(epsilon) +
                    ", have " + std::to_string(n));
    }
    require(n > 0, ErrorCode::InsufficientSamples, "no samples");
    auto k = static_cast<std::size_t>(std::ceil((1.0 - epsilon) * static_cast<double>(n) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    std::nth_element(samples.begin(), samples.begin() + static_cast<long>(k - 1), samples.end());
    return samples[k - 1];
}

Comparison compare_bound(const std::vector<double>& samples, double bound, double epsilon) {
    Comparison c;
    c.bound = bound;
    c.quantile = empirical_quantile(samples, epsilon);
    c.reliable = bound >= c.quantile;
    c.tightness = c.quantile > 0.0 ? bound / c.quantile : std::numeric_limits<double>::infinity();
    return c;
}

Comparison compare_bound(const SimResult& result, const std::string& flow_id, double bound, double epsilon) {
    auto it = result.delays.find(flow_id);
    require(it != result.delays.end(), ErrorCode::InvalidArgument, "no delays for flow '" + flow_id + "'");
    return compare_bound(it->second, bound, epsilon);
}

}  // namespace dmapar
