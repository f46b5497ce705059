#include "dmapar/snc.hpp"

#include "dmapar/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

namespace dmapar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SigmaRhoPoint invalid_point(double theta, const std::string& why) {
    SigmaRhoPoint p;
    p.theta = theta;
    p.valid = false;
    p.error = why;
    p.sigma = std::numeric_limits<double>::quiet_NaN();
    p.rho = std::numeric_limits<double>::quiet_NaN();
    return p;
}

SigmaRhoPoint safe_eval(const SigmaRhoEnvelope& e, double theta) {
    try {
        return e.eval(theta);
    } catch (const Error& err) {
        return invalid_point(theta, err.what());
    }
}

void check_grid(const SigmaRhoEnvelope& a, const SigmaRhoEnvelope& b) {
    require(a.points.size() == b.points.size(), ErrorCode::InvalidArgument,
            "envelopes '" + a.label + "' and '" + b.label + "' use different theta grids");
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        double x = a.points[k].theta, y = b.points[k].theta;
        require(std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)), ErrorCode::InvalidArgument,
                "envelopes '" + a.label + "' and '" + b.label + "' use different theta grids");
    }
}

double join_dt(double a, double b) {
    if (a <= 0.0) return b;
    if (b <= 0.0) return a;
    require(std::abs(a - b) <= 1e-12 * std::max(a, b), ErrorCode::InvalidArgument,
            "envelopes carry different slot lengths");
    return a;
}

SigmaRhoPoint agg_pt(const SigmaRhoPoint& x, const SigmaRhoPoint& y) {
    SigmaRhoPoint p;
    p.theta = x.theta;
    if (!x.valid || !y.valid) return invalid_point(x.theta, "input invalid");
    p.sigma = x.sigma + y.sigma;
    p.rho = x.rho + y.rho;
    p.valid = true;
    return p;
}

SigmaRhoPoint left_pt(const SigmaRhoPoint& s, const SigmaRhoPoint& c) {
    if (!s.valid || !c.valid) return invalid_point(s.theta, "input invalid");
    SigmaRhoPoint p;
    p.theta = s.theta;
    p.sigma = s.sigma + c.sigma;
    p.rho = s.rho - c.rho;
    p.valid = p.rho > 0.0;
    if (!p.valid) p.error = "unstable: cross rate exceeds service rate";
    return p;
}

SigmaRhoPoint concat_pt(const SigmaRhoPoint& x, const SigmaRhoPoint& y, double dt, double delta, bool* slack) {
    if (!x.valid || !y.valid) return invalid_point(x.theta, "input invalid");
    SigmaRhoPoint p;
    p.theta = x.theta;
    double lo = std::min(x.rho, y.rho), hi = std::max(x.rho, y.rho);
    double gap = hi - lo;
    if (gap < delta * hi) {
        lo = std::min(lo, hi * (1.0 - delta));
        gap = hi - lo;
        if (slack) *slack = true;
    }
    p.rho = lo;
    double e = std::exp(-x.theta * dt * gap);
    p.sigma = x.sigma + y.sigma - std::log1p(-e) / x.theta;
    p.valid = p.rho > 0.0 && std::isfinite(p.sigma);
    return p;
}

// Rate-latency servers compose exactly: rate min, latencies add.
SigmaRhoPoint det_concat_pt(const SigmaRhoPoint& x, const SigmaRhoPoint& y) {
    if (!x.valid || !y.valid) return invalid_point(x.theta, "input invalid");
    SigmaRhoPoint p;
    p.theta = x.theta;
    p.rho = std::min(x.rho, y.rho);
    p.sigma = (x.sigma / x.rho + y.sigma / y.rho) * p.rho;
    p.valid = true;
    return p;
}

SigmaRhoPoint out_pt(const SigmaRhoPoint& a, const SigmaRhoPoint& s, double dt) {
    if (!a.valid || !s.valid) return invalid_point(a.theta, "input invalid");
    if (!(a.rho < s.rho)) return invalid_point(a.theta, "unstable: arrival rate exceeds service rate");
    SigmaRhoPoint p;
    p.theta = a.theta;
    p.rho = a.rho;
    p.sigma = a.sigma + s.sigma - std::log1p(-std::exp(a.theta * dt * (a.rho - s.rho))) / a.theta;
    p.valid = std::isfinite(p.sigma);
    return p;
}

template <class F>
SigmaRhoEnvelope combine(const SigmaRhoEnvelope& a, const SigmaRhoEnvelope& b, EnvelopeKind kind, F f) {
    check_grid(a, b);
    SigmaRhoEnvelope out;
    out.kind = kind;
    out.dt = join_dt(a.dt, b.dt);
    out.points.reserve(a.points.size());
    for (std::size_t k = 0; k < a.points.size(); ++k) out.points.push_back(f(a.points[k], b.points[k]));
    if (a.eval && b.eval) {
        auto pa = std::make_shared<const SigmaRhoEnvelope>(a);
        auto pb = std::make_shared<const SigmaRhoEnvelope>(b);
        out.eval = [pa, pb, f](double th) { return f(safe_eval(*pa, th), safe_eval(*pb, th)); };
    }
    out.notes = a.notes;
    out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
    return out;
}

}  // namespace

std::vector<double> SigmaRhoEnvelope::grid() const {
    std::vector<double> g;
    g.reserve(points.size());
    for (const auto& p : points) g.push_back(p.theta);
    return g;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    require(lo > 0.0 && hi > lo && n >= 2, ErrorCode::InvalidArgument, "log grid needs 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    double a = std::log(lo), b = std::log(hi);
    for (std::size_t k = 0; k < n; ++k)
        g[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    return g;
}

std::vector<double> default_theta_grid(double mean_burst_bytes, std::size_t n) {
    require(mean_burst_bytes > 0.0, ErrorCode::InvalidArgument, "mean burst must be positive");
    return log_grid(1e-6 / mean_burst_bytes, 10.0 / mean_burst_bytes, n);
}

SigmaRhoEnvelope arrival_envelope(const DMaparHmm& model, const std::vector<double>& theta_grid, const RConfig& r,
                                  const std::string& label) {
    auto eng = std::make_shared<const EnvelopeEngine>(model, r);
    SigmaRhoEnvelope e;
    e.kind = EnvelopeKind::Arrival;
    e.label = label;
    e.dt = model.dt;
    for (std::size_t k = 0; k < theta_grid.size(); ++k) {
        require(theta_grid[k] > 0.0 && (k == 0 || theta_grid[k] > theta_grid[k - 1]), ErrorCode::InvalidArgument,
                "theta grid must be positive and strictly increasing");
        try {
            e.points.push_back(eng->point(theta_grid[k]));
        } catch (const Error& err) {
            e.points.push_back(invalid_point(theta_grid[k], err.what()));
        }
    }
    e.eval = [eng](double th) { return eng->point(th, false); };
    return e;
}

SigmaRhoEnvelope constant_rate_service(double c_bits, const std::vector<double>& theta_grid,
                                       const std::string& label) {
    require(c_bits > 0.0 && std::isfinite(c_bits), ErrorCode::InvalidArgument, "service rate must be positive");
    double rate = c_bits / 8.0;
    auto make = [rate](double th) {
        SigmaRhoPoint p;
        p.theta = th;
        p.sigma = 0.0;
        p.rho = rate;
        p.valid = true;
        return p;
    };
    SigmaRhoEnvelope e;
    e.kind = EnvelopeKind::Service;
    e.label = label;
    e.deterministic = true;
    for (double th : theta_grid) e.points.push_back(make(th));
    e.eval = make;
    return e;
}

SigmaRhoEnvelope aggregate(const SigmaRhoEnvelope& a1, const SigmaRhoEnvelope& a2) {
    require(a1.kind == EnvelopeKind::Arrival && a2.kind == EnvelopeKind::Arrival, ErrorCode::InvalidArgument,
            "aggregate expects arrival envelopes");
    auto out = combine(a1, a2, EnvelopeKind::Arrival, agg_pt);
    out.label = a1.label + "+" + a2.label;
    return out;
}

SigmaRhoEnvelope leftover(const SigmaRhoEnvelope& s, const SigmaRhoEnvelope& cross) {
    require(s.kind == EnvelopeKind::Service && cross.kind == EnvelopeKind::Arrival, ErrorCode::InvalidArgument,
            "leftover expects (service, arrival)");
    auto out = combine(s, cross, EnvelopeKind::Service, left_pt);
    out.label = s.label + "-" + cross.label;
    return out;
}

SigmaRhoEnvelope concatenate(const SigmaRhoEnvelope& s1, const SigmaRhoEnvelope& s2, const ConcatOptions& opts) {
    require(s1.kind == EnvelopeKind::Service && s2.kind == EnvelopeKind::Service, ErrorCode::InvalidArgument,
            "concatenate expects service envelopes");
    require(opts.delta > 0.0 && opts.delta < 1.0, ErrorCode::InvalidArgument, "delta must be in (0,1)");
    double dt = join_dt(join_dt(s1.dt, s2.dt), opts.dt_ref);
    require(dt > 0.0, ErrorCode::InvalidArgument, "concatenate needs a slot length (dt_ref)");
    bool slack = false;
    const double delta = opts.delta;
    auto f = [dt, delta](const SigmaRhoPoint& x, const SigmaRhoPoint& y) {
        return concat_pt(x, y, dt, delta, nullptr);
    };
    auto out = combine(s1, s2, EnvelopeKind::Service, f);
    for (std::size_t k = 0; k < out.points.size(); ++k) concat_pt(s1.points[k], s2.points[k], dt, delta, &slack);
    out.dt = dt;
    out.label = s1.label + "*" + s2.label;
    if (slack) out.notes.push_back("rate slack delta=" + std::to_string(delta) + " applied");
    return out;
}

SigmaRhoEnvelope output_envelope(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service) {
    require(arrival.kind == EnvelopeKind::Arrival && service.kind == EnvelopeKind::Service,
            ErrorCode::InvalidArgument, "output_envelope expects (arrival, service)");
    double dt = join_dt(arrival.dt, service.dt);
    require(dt > 0.0, ErrorCode::InvalidArgument, "output envelope needs a slot length");
    auto f = [dt](const SigmaRhoPoint& a, const SigmaRhoPoint& s) { return out_pt(a, s, dt); };
    auto out = combine(arrival, service, EnvelopeKind::Arrival, f);
    out.label = arrival.label + "@out";
    return out;
}

// --- topology -------------------------------------------------------------

const ServerSpec& TopologySpec::server(const std::string& id) const {
    for (const auto& s : servers)
        if (s.id == id) return s;
    fail(ErrorCode::InvalidArgument, "unknown server '" + id + "'");
}

const FlowSpec& TopologySpec::flow(const std::string& id) const {
    for (const auto& f : flows)
        if (f.id == id) return f;
    fail(ErrorCode::InvalidArgument, "unknown flow '" + id + "'");
}

std::vector<std::string> TopologySpec::validate() const {
    require(!servers.empty(), ErrorCode::InvalidArgument, "topology has no servers");
    std::map<std::string, std::size_t> idx;
    for (const auto& s : servers) {
        require(!s.id.empty(), ErrorCode::InvalidArgument, "server with empty id");
        require(s.rate_bits > 0.0, ErrorCode::InvalidArgument, "server '" + s.id + "' needs a positive rate");
        require(s.queues >= 1, ErrorCode::InvalidArgument, "server '" + s.id + "' needs at least one queue");
        require(idx.emplace(s.id, idx.size()).second, ErrorCode::InvalidArgument, "duplicate server '" + s.id + "'");
    }
    std::set<std::string> fids;
    const std::size_t n = servers.size();
    std::vector<std::set<std::size_t>> succ(n);
    for (const auto& f : flows) {
        require(fids.insert(f.id).second, ErrorCode::InvalidArgument, "duplicate flow '" + f.id + "'");
        require(!f.path.empty(), ErrorCode::InvalidArgument, "flow '" + f.id + "' has an empty path");
        require(f.priority >= 0, ErrorCode::InvalidArgument, "flow '" + f.id + "' has a negative priority");
        std::set<std::string> seen;
        for (std::size_t k = 0; k < f.path.size(); ++k) {
            auto it = idx.find(f.path[k]);
            require(it != idx.end(), ErrorCode::InvalidArgument,
                    "flow '" + f.id + "' references unknown server '" + f.path[k] + "'");
            require(seen.insert(f.path[k]).second, ErrorCode::NotFeedForward,
                    "flow '" + f.id + "' visits server '" + f.path[k] + "' twice");
            require(f.priority < servers[it->second].queues, ErrorCode::InvalidArgument,
                    "flow '" + f.id + "' priority exceeds queues at '" + f.path[k] + "'");
            if (k > 0) succ[idx[f.path[k - 1]]].insert(it->second);
        }
    }
    // Kahn's algorithm, ties by declaration order.
    std::vector<int> indeg(n, 0);
    for (const auto& s : succ)
        for (auto j : s) ++indeg[j];
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.insert(i);
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(servers[i].id);
        for (auto j : succ[i])
            if (--indeg[j] == 0) ready.insert(j);
    }
    require(order.size() == n, ErrorCode::NotFeedForward, "topology contains a cycle");
    return order;
}

// --- PMOO reduction --------------------------------------------------------

namespace {

struct Segment {
    std::string flow;
    int a = 0, b = 0;   // inclusive indices into the analysed path
    int entry = 0;      // index of server a in the cross flow's path
};

class Reducer {
public:
    Reducer(const TopologySpec& topo, const std::map<std::string, SigmaRhoEnvelope>& arrivals,
            const PmooOptions& opts, bool hop_by_hop)
        : topo_(topo), arrivals_(arrivals), opts_(opts), hop_(hop_by_hop) {
        topo_.validate();
        require(opts.delta > 0.0 && opts.delta < 1.0, ErrorCode::InvalidArgument, "delta must be in (0,1)");
        require(opts.max_packet_bytes >= 0.0, ErrorCode::InvalidArgument, "packet size must be non-negative");
    }

    SigmaRhoEnvelope e2e(const std::string& fid, int len) {
        auto key = std::make_pair(fid, len);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        require(active_.insert(key).second, ErrorCode::NotFeedForward, "cyclic dependency while reducing flow " + fid);
        SigmaRhoEnvelope out = reduce(topo_.flow(fid), len);
        active_.erase(key);
        memo_.emplace(key, out);
        return out;
    }

private:
    const SigmaRhoEnvelope& source(const std::string& fid) {
        auto it = arrivals_.find(fid);
        if (it == arrivals_.end()) fail(ErrorCode::MissingEnvelope, "no arrival envelope for flow '" + fid + "'");
        return it->second;
    }

    // Arrival envelope of flow g at the entry of its path index m.
    SigmaRhoEnvelope envelope_at(const std::string& g, int m) {
        const SigmaRhoEnvelope& src = source(g);
        if (m == 0) return src;
        return output_envelope(src, e2e(g, m));
    }

    SigmaRhoEnvelope hop(const std::string& sid, const std::vector<double>& grid) {
        const ServerSpec& s = topo_.server(sid);
        SigmaRhoEnvelope e = constant_rate_service(s.rate_bits, grid, sid);
        if (opts_.max_packet_bytes > 0.0) {
            double extra = 2.0 * opts_.max_packet_bytes;
            for (auto& p : e.points) p.sigma += extra;
            auto base = e.eval;
            e.eval = [base, extra](double th) {
                auto p = base(th);
                p.sigma += extra;
                return p;
            };
        }
        return e;
    }

    SigmaRhoEnvelope join(const SigmaRhoEnvelope& x, const SigmaRhoEnvelope& y, double dt) {
        if (x.deterministic && y.deterministic) {
            auto out = combine(x, y, EnvelopeKind::Service, det_concat_pt);
            out.deterministic = true;
            out.label = x.label + "*" + y.label;
            return out;
        }
        ConcatOptions co;
        co.delta = opts_.delta;
        co.dt_ref = dt;
        return concatenate(x, y, co);
    }

    SigmaRhoEnvelope reduce(const FlowSpec& f, int len) {
        const SigmaRhoEnvelope& own = source(f.id);
        const std::vector<double> grid = own.grid();
        const double dt = own.dt;
        require(dt > 0.0, ErrorCode::InvalidArgument, "arrival envelope of '" + f.id + "' lacks a slot length");

        std::vector<Segment> segs;
        for (const auto& g : topo_.flows) {
            if (g.id == f.id) continue;
            bool interferes = g.priority < f.priority || (opts_.subtract_equal_priority && g.priority == f.priority);
            if (!interferes) continue;
            std::map<std::string, int> gpos;
            for (std::size_t k = 0; k < g.path.size(); ++k) gpos[g.path[k]] = static_cast<int>(k);
            Segment cur;
            bool open = false;
            for (int k = 0; k < len; ++k) {
                auto it = gpos.find(f.path[static_cast<std::size_t>(k)]);
                if (it != gpos.end() && open && it->second == cur.entry + (k - cur.a)) {
                    cur.b = k;
                    continue;
                }
                if (open) segs.push_back(cur);
                open = false;
                if (it != gpos.end()) {
                    cur = Segment{g.id, k, k, it->second};
                    open = true;
                }
            }
            if (open) segs.push_back(cur);
        }

        // Crossing segments (and everything in hop-by-hop mode) are handled per server.
        std::vector<bool> per_server(segs.size(), hop_);
        for (std::size_t i = 0; i < segs.size(); ++i)
            for (std::size_t j = 0; j < segs.size(); ++j) {
                if (i == j) continue;
                const auto& x = segs[i];
                const auto& y = segs[j];
                bool overlap = x.a <= y.b && y.a <= x.b;
                bool nested = (x.a <= y.a && y.b <= x.b) || (y.a <= x.a && x.b <= y.b);
                if (overlap && !nested) per_server[i] = true;
            }

        struct Block {
            int a, b;
            SigmaRhoEnvelope s;
        };
        std::vector<Block> blocks;
        for (int k = 0; k < len; ++k) blocks.push_back({k, k, hop(f.path[static_cast<std::size_t>(k)], grid)});

        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (!per_server[i]) continue;
            const auto& sg = segs[i];
            for (int k = sg.a; k <= sg.b; ++k) {
                auto cross = envelope_at(sg.flow, sg.entry + (k - sg.a));
                auto& blk = blocks[static_cast<std::size_t>(k)];
                blk.s = leftover(blk.s, cross);
                blk.s.deterministic = false;
            }
        }

        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < segs.size(); ++i)
            if (!per_server[i]) order.push_back(i);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return segs[x].b - segs[x].a < segs[y].b - segs[y].a;
        });
        for (std::size_t i : order) {
            const auto& sg = segs[i];
            auto first = std::find_if(blocks.begin(), blocks.end(), [&](const Block& b) { return b.a == sg.a; });
            auto last = std::find_if(blocks.begin(), blocks.end(), [&](const Block& b) { return b.b == sg.b; });
            require(first != blocks.end() && last != blocks.end(), ErrorCode::NumericDegeneracy,
                    "segment boundaries are not laminar");
            SigmaRhoEnvelope merged = first->s;
            for (auto it = first + 1; it != last + 1; ++it) merged = join(merged, it->s, dt);
            merged = leftover(merged, envelope_at(sg.flow, sg.entry));
            merged.deterministic = false;
            Block nb{sg.a, sg.b, merged};
            auto pos = blocks.erase(first, last + 1);
            blocks.insert(pos, nb);
        }

        SigmaRhoEnvelope total = blocks.front().s;
        for (std::size_t k = 1; k < blocks.size(); ++k) total = join(total, blocks[k].s, dt);
        total.dt = dt;
        total.label = f.id + (hop_ ? ":hop" : ":pmoo");
        return total;
    }

    const TopologySpec& topo_;
    const std::map<std::string, SigmaRhoEnvelope>& arrivals_;
    PmooOptions opts_;
    bool hop_;
    std::map<std::pair<std::string, int>, SigmaRhoEnvelope> memo_;
    std::set<std::pair<std::string, int>> active_;
};

}  // namespace

SigmaRhoEnvelope pmoo_e2e(const TopologySpec& topo, const std::string& flow_id,
                          const std::map<std::string, SigmaRhoEnvelope>& arrivals, const PmooOptions& opts) {
    Reducer r(topo, arrivals, opts, false);
    const FlowSpec& f = topo.flow(flow_id);
    return r.e2e(flow_id, static_cast<int>(f.path.size()));
}

SigmaRhoEnvelope hop_by_hop_e2e(const TopologySpec& topo, const std::string& flow_id,
                                const std::map<std::string, SigmaRhoEnvelope>& arrivals, const PmooOptions& opts) {
    Reducer r(topo, arrivals, opts, true);
    const FlowSpec& f = topo.flow(flow_id);
    return r.e2e(flow_id, static_cast<int>(f.path.size()));
}

// --- bounds -----------------------------------------------------------------

double delay_at(const SigmaRhoPoint& a, const SigmaRhoPoint& s, double dt, double epsilon) {
    if (!a.valid || !s.valid || !(a.rho < s.rho) || s.rho <= 0.0) return kInf;
    double g = -std::expm1(a.theta * dt * (a.rho - s.rho));
    double v = (a.sigma + s.sigma) / s.rho - std::log(epsilon * g) / (a.theta * s.rho);
    return std::isfinite(v) ? v : kInf;
}

double backlog_at(const SigmaRhoPoint& a, const SigmaRhoPoint& s, double dt, double epsilon) {
    if (!a.valid || !s.valid || !(a.rho < s.rho)) return kInf;
    double g = -std::expm1(a.theta * dt * (a.rho - s.rho));
    double v = a.sigma + s.sigma - std::log(epsilon * g) / a.theta;
    return std::isfinite(v) ? v : kInf;
}

namespace {

template <class F>
BoundResult search(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service, double epsilon, F term) {
    require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::InvalidArgument, "epsilon must be in (0,1)");
    require(arrival.kind == EnvelopeKind::Arrival && service.kind == EnvelopeKind::Service,
            ErrorCode::InvalidArgument, "bound expects (arrival, service)");
    check_grid(arrival, service);
    const double dt = join_dt(arrival.dt, service.dt);
    require(dt > 0.0, ErrorCode::InvalidArgument, "bound needs a slot length");
    BoundResult res;
    res.value = kInf;
    std::size_t best = 0;
    for (std::size_t k = 0; k < arrival.points.size(); ++k) {
        double v = term(arrival.points[k], service.points[k], dt, epsilon);
        ++res.evaluations;
        if (std::isfinite(v)) ++res.valid_points;
        if (v < res.value) {
            res.value = v;
            best = k;
        }
    }
    if (!std::isfinite(res.value))
        fail(ErrorCode::Unstable, "no theta with rho_A < rho_S; the bound is infinite");
    res.theta_star = arrival.points[best].theta;
    res.grid_value = res.value;
    if (!arrival.eval || !service.eval || arrival.points.size() < 2) return res;

    const auto& pts = arrival.points;
    double lo = pts[best == 0 ? 0 : best - 1].theta;
    double hi = pts[std::min(best + 1, pts.size() - 1)].theta;
    auto f = [&](double lth) {
        double th = std::exp(lth);
        ++res.evaluations;
        return term(safe_eval(arrival, th), safe_eval(service, th), dt, epsilon);
    };
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(lo), b = std::log(hi);
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-7) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    double xm = 0.5 * (a + b);
    double fm = f(xm);
    for (auto [x, v] : {std::pair{c, fc}, std::pair{d, fd}, std::pair{xm, fm}}) {
        if (v < res.value) {
            res.value = v;
            res.theta_star = std::exp(x);
            res.refined = true;
        }
    }
    return res;
}

}  // namespace

BoundResult delay_bound(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service, double epsilon) {
    return search(arrival, service, epsilon, delay_at);
}

BoundResult backlog_bound(const SigmaRhoEnvelope& arrival, const SigmaRhoEnvelope& service, double epsilon) {
    return search(arrival, service, epsilon, backlog_at);
}

}  // namespace dmapar
