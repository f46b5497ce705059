// dmapar: fit, synthesize, bound and simulate traffic models from the command line.

#include "dmapar/des.hpp"
#include "dmapar/envelope.hpp"
#include "dmapar/error.hpp"
#include "dmapar/fit.hpp"
#include "dmapar/io.hpp"
#include "dmapar/model.hpp"
#include "dmapar/snc.hpp"
#include "dmapar/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dmapar;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 1;

struct Globals {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    double dt = 0.0;
    std::string theta_grid;
    std::vector<double> epsilon{1e-4, 1e-5};
    std::vector<std::string> argv;
};

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "bad integer list '" + s + "'");
        }
    }
    require(!out.empty(), ErrorCode::InvalidArgument, "empty integer list");
    return out;
}

std::vector<std::string> parse_name_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

// "lo:hi:n" (log-spaced) or "a,b,c".
std::vector<double> parse_theta_grid(const std::string& s) {
    try {
        if (s.find(':') != std::string::npos) {
            std::stringstream ss(s);
            std::string a, b, c;
            std::getline(ss, a, ':');
            std::getline(ss, b, ':');
            std::getline(ss, c, ':');
            return log_grid(std::stod(a), std::stod(b), static_cast<std::size_t>(std::stoul(c)));
        }
        std::vector<double> g;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) g.push_back(std::stod(tok));
        require(!g.empty(), ErrorCode::InvalidArgument, "empty theta grid");
        return g;
    } catch (const std::invalid_argument&) {
        fail(ErrorCode::InvalidArgument, "bad theta grid '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(ErrorCode::InvalidArgument, "bad theta grid '" + s + "'");
    }
}

double mean_burst(const DMaparHmm& m) {
    double on = on_fraction(m);
    double mean = mean_slot_bytes(m);
    return on > 0.0 && mean > 0.0 ? mean / on : 1.0;
}

std::vector<double> resolve_grid(const Globals& g, double burst) {
    if (!g.theta_grid.empty()) return parse_theta_grid(g.theta_grid);
    return default_theta_grid(burst);
}

RConfig r_config(const std::string& method, std::size_t samples, std::uint64_t seed) {
    RConfig r;
    if (method == "identity")
        r.method = RMethod::Identity;
    else if (method == "mc" || method == "monte_carlo")
        r.method = RMethod::MonteCarlo;
    else
        fail(ErrorCode::InvalidArgument, "unknown R method '" + method + "'");
    r.samples = samples;
    r.seed = seed;
    return r;
}

std::string out_path(const Globals& g, const std::string& name) { return (fs::path(g.out_dir) / name).string(); }

void write_manifest(const Globals& g, const std::string& command, json params, const std::vector<std::string>& outputs) {
    json m = {{"command", command},
              {"argv", g.argv},
              {"seed", g.seed},
              {"out_dir", g.out_dir},
              {"dt", g.dt},
              {"theta_grid", g.theta_grid},
              {"epsilon", g.epsilon},
              {"parameters", std::move(params)},
              {"outputs", outputs},
              {"tool_version", "0.1.0"}};
    write_file_atomic(out_path(g, command + "_manifest.json"), m.dump(2) + "\n");
}

json report_to_json(const ModelFitReport& r) {
    json cands = json::array();
    for (const auto& c : r.candidates)
        cands.push_back({{"N", c.N}, {"p", c.p}, {"ok", c.ok}, {"log_likelihood", c.log_likelihood},
                         {"score", c.score}, {"error", c.error}});
    return {{"dt", r.dt},
            {"slots", r.slots},
            {"on_slots", r.on_slots},
            {"m_off", r.m_off},
            {"m_on", r.m_on},
            {"N", r.N},
            {"p", r.p},
            {"map_off_log_likelihood", r.map_off_log_likelihood},
            {"map_on_log_likelihood", r.map_on_log_likelihood},
            {"order_candidates", cands},
            {"on_fraction_data", r.on_fraction_data},
            {"on_fraction_model", r.on_fraction_model},
            {"mean_slot_data", r.mean_slot_data},
            {"mean_slot_model", r.mean_slot_model},
            {"notes", r.notes}};
}

// Flow sources resolved from a topology.
struct FlowSource {
    DMaparHmm model;
    bool from_trace = false;
    TraceSeries trace;
};

std::map<std::string, FlowSource> load_sources(const TopologySpec& topo, const Globals& g) {
    std::map<std::string, FlowSource> out;
    for (const auto& f : topo.flows) {
        FlowSource src;
        if (f.source_kind == "model") {
            src.model = load_model(f.source);
        } else if (f.source_kind == "trace") {
            src.from_trace = true;
            src.trace = load_trace(f.source);
            double dt = g.dt > 0.0 ? g.dt : default_dt(src.trace);
            src.model = fit_model(discretize(src.trace, dt)).model;
        } else {
            fail(ErrorCode::InvalidArgument, "flow '" + f.id + "' has no model or trace source");
        }
        out.emplace(f.id, std::move(src));
    }
    return out;
}

std::vector<double> network_grid(const Globals& g, const std::map<std::string, DMaparHmm>& models) {
    double burst = 0.0;
    for (const auto& [id, m] : models) burst = std::max(burst, mean_burst(m));
    return resolve_grid(g, burst);
}

struct BoundRow {
    std::string flow;
    double epsilon;
    double delay;
    double theta;
    double backlog;
};

std::vector<BoundRow> network_bounds(const TopologySpec& topo, const std::map<std::string, DMaparHmm>& models,
                                     const std::vector<double>& grid, const RConfig& rc, const PmooOptions& po,
                                     const std::vector<double>& eps, const std::string& only_flow) {
    std::map<std::string, SigmaRhoEnvelope> arrivals;
    for (const auto& [id, m] : models) arrivals[id] = arrival_envelope(m, grid, rc, id);
    std::vector<BoundRow> rows;
    for (const auto& f : topo.flows) {
        if (!only_flow.empty() && f.id != only_flow) continue;
        SigmaRhoEnvelope s = pmoo_e2e(topo, f.id, arrivals, po);
        for (double e : eps) {
            BoundRow r{f.id, e, std::numeric_limits<double>::infinity(), 0.0, std::numeric_limits<double>::infinity()};
            try {
                BoundResult d = delay_bound(arrivals[f.id], s, e);
                r.delay = d.value;
                r.theta = d.theta_star;
                r.backlog = backlog_bound(arrivals[f.id], s, e).value;
            } catch (const Error& err) {
                if (err.code() != ErrorCode::Unstable) throw;
            }
            rows.push_back(r);
        }
    }
    return rows;
}

std::map<std::string, std::vector<Packet>> make_packets(const TopologySpec& topo,
                                                        const std::map<std::string, FlowSource>& sources,
                                                        double duration, std::uint64_t seed, double mtu) {
    std::map<std::string, std::vector<Packet>> out;
    for (std::size_t k = 0; k < topo.flows.size(); ++k) {
        const auto& f = topo.flows[k];
        const FlowSource& src = sources.at(f.id);
        if (src.from_trace) {
            auto pk = packets_from_trace(src.trace, mtu);
            std::erase_if(pk, [&](const Packet& p) { return p.time > duration; });
            out[f.id] = std::move(pk);
        } else {
            auto n = static_cast<std::size_t>(std::ceil(duration / src.model.dt));
            Rng rng = make_rng(seed, k + 1);
            out[f.id] = packets_from_slots(generate(src.model, n, rng).trace, mtu);
        }
    }
    return out;
}

// --- commands ---------------------------------------------------------------

struct FitArgs {
    std::string trace;
    std::string out;
    int m_off = 2;
    int m_on = 2;
    std::string N = "1,2";
    std::string p = "0,1";
    std::string criterion = "bic";
    std::string residual = "normal";
    int restarts = 3;
};

int cmd_fit(const Globals& g, const FitArgs& a) {
    TraceSeries tr = load_trace(a.trace);
    double dt = g.dt > 0.0 ? g.dt : default_dt(tr);
    DiscretizedTrace disc = discretize(tr, dt);
    ModelFitOptions o;
    o.m_off = a.m_off;
    o.m_on = a.m_on;
    o.N_candidates = parse_int_list(a.N);
    o.p_candidates = parse_int_list(a.p);
    if (a.criterion == "aic")
        o.criterion = Criterion::AIC;
    else if (a.criterion == "bic")
        o.criterion = Criterion::BIC;
    else
        fail(ErrorCode::InvalidArgument, "criterion must be aic or bic");
    o.residual = parse_residual(a.residual);
    o.map.restarts = a.restarts;
    o.map.seed = g.seed;
    ModelFit fit = fit_model(disc, o);

    json rep = report_to_json(fit.report);
    Rng rng = make_rng(g.seed, 0x5e);
    GenerateResult syn = generate(fit.model, disc.a.size(), rng);
    json val = {{"cv_input", cv(disc.a)}, {"cv_synthetic", cv(syn.trace.a)}, {"clamp_fraction", syn.clamp_fraction}};
    if (disc.a.size() >= 64 && syn.trace.a.size() >= 64) {
        try {
            val["hurst_input"] = hurst(disc.a);
            val["hurst_synthetic"] = hurst(syn.trace.a);
        } catch (const Error& e) {
            val["hurst_error"] = e.what();
        }
    }
    rep["validation"] = val;
    std::string path = a.out.empty() ? out_path(g, "model.json") : a.out;
    save_model(path, fit.model, rep.dump());
    write_manifest(g, "fit",
                   {{"trace", a.trace}, {"dt", dt}, {"m_off", a.m_off}, {"m_on", a.m_on}, {"N", a.N}, {"p", a.p},
                    {"criterion", a.criterion}, {"residual", a.residual}, {"restarts", a.restarts}},
                   {path});
    std::cout << "model: " << path << "\n"
              << "dt_s: " << fmt(dt) << "\n"
              << "carrier: " << carrier_kind_name(fit.model.carrier.mode.kind) << " m_off=" << fit.report.m_off
              << " m_on=" << fit.report.m_on << "\n"
              << "arhmm: N=" << fit.report.N << " p=" << fit.report.p << "\n"
              << "on_fraction: data=" << fmt(fit.report.on_fraction_data)
              << " model=" << fmt(fit.report.on_fraction_model) << "\n"
              << "mean_slot_bytes: data=" << fmt(fit.report.mean_slot_data)
              << " model=" << fmt(fit.report.mean_slot_model) << "\n";
    if (val.contains("hurst_input"))
        std::cout << "hurst: input=" << fmt(val["hurst_input"].get<double>())
                  << " synthetic=" << fmt(val["hurst_synthetic"].get<double>()) << "\n";
    std::cout << "cv: input=" << fmt(val["cv_input"].get<double>())
              << " synthetic=" << fmt(val["cv_synthetic"].get<double>()) << "\n";
    return 0;
}

struct SynthArgs {
    std::string model;
    std::size_t slots = 100000;
    std::string out;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
    DMaparHmm m = load_model(a.model);
    require(a.slots >= 1, ErrorCode::InvalidArgument, "slots must be at least 1");
    Rng rng = make_rng(g.seed, 0);
    GenerateResult res = generate(m, a.slots, rng);
    std::ostringstream csv;
    write_trace_csv(csv, res.trace);
    std::string path = a.out.empty() ? out_path(g, "synth.csv") : a.out;
    write_file_atomic(path, csv.str());
    double total = 0.0;
    for (double x : res.trace.a) total += x;
    double mean = total / static_cast<double>(a.slots);
    write_manifest(g, "synth", {{"model", a.model}, {"slots", a.slots}}, {path});
    std::cout << "trace: " << path << "\n"
              << "mean_slot_bytes: synthetic=" << fmt(mean) << " model=" << fmt(mean_slot_bytes(m)) << "\n"
              << "clamp_fraction: " << fmt(res.clamp_fraction) << "\n";
    std::vector<double> full(res.trace.a);
    full.resize(a.slots, 0.0);
    if (full.size() >= 64) {
        try {
            std::cout << "hurst: " << fmt(hurst(full)) << "\n";
        } catch (const Error&) {
        }
    }
    if (mean > 0.0) std::cout << "cv: " << fmt(cv(full)) << "\n";
    return 0;
}

struct FeatureArgs {
    std::string model;
    std::string out;
    std::string r_method = "mc";
    std::size_t r_samples = 100000;
};

int cmd_features(const Globals& g, const FeatureArgs& a) {
    DMaparHmm m = load_model(a.model);
    std::vector<double> grid = resolve_grid(g, mean_burst(m));
    RConfig rc = r_config(a.r_method, a.r_samples, g.seed);
    std::vector<SigmaRhoPoint> pts = envelope_curve(m, grid, rc);
    std::string path = a.out.empty() ? out_path(g, "envelope.csv") : a.out;
    write_file_atomic(path, envelope_csv(pts));
    write_manifest(g, "features",
                   {{"model", a.model}, {"grid", grid}, {"r_method", a.r_method}, {"r_samples", a.r_samples}}, {path});
    std::size_t bad = std::count_if(pts.begin(), pts.end(), [](const SigmaRhoPoint& p) { return !p.valid; });
    std::cout << "envelope: " << path << "\npoints: " << pts.size() << " invalid: " << bad << "\n";
    return 0;
}

struct BoundArgs {
    std::string topology;
    std::string flow;
    std::string out;
    std::string r_method = "mc";
    std::size_t r_samples = 100000;
    double packet_bytes = 1500.0;
    double delta = 1e-3;
};

int cmd_bound(const Globals& g, const BoundArgs& a) {
    TopologySpec topo = load_topology(a.topology);
    if (!a.flow.empty()) topo.flow(a.flow);
    auto sources = load_sources(topo, g);
    std::map<std::string, DMaparHmm> models;
    for (const auto& [id, s] : sources) models.emplace(id, s.model);
    std::vector<double> grid = network_grid(g, models);
    PmooOptions po;
    po.max_packet_bytes = a.packet_bytes;
    po.delta = a.delta;
    auto rows = network_bounds(topo, models, grid, r_config(a.r_method, a.r_samples, g.seed), po, g.epsilon, a.flow);
    std::ostringstream csv;
    csv << "flow_id,epsilon,T_eps_s,theta_star,backlog_bytes\n";
    for (const auto& r : rows)
        csv << r.flow << ',' << fmt(r.epsilon) << ',' << fmt(r.delay) << ',' << fmt(r.theta) << ','
            << fmt(r.backlog) << '\n';
    std::string path = a.out.empty() ? out_path(g, "bounds.csv") : a.out;
    write_file_atomic(path, csv.str());
    write_manifest(g, "bound",
                   {{"topology", a.topology}, {"flow", a.flow}, {"grid", grid}, {"r_method", a.r_method},
                    {"r_samples", a.r_samples}, {"packet_bytes", a.packet_bytes}, {"delta", a.delta}},
                   {path});
    std::cout << csv.str();
    return 0;
}

struct SimArgs {
    std::string topology;
    double duration = 10.0;
    int seeds = 1;
    double mtu = 1500.0;
    bool packets = false;
};

std::string quantile_or_na(const std::vector<double>& d, double eps) {
    try {
        return fmt(empirical_quantile(d, eps));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InsufficientSamples) return "NA";
        throw;
    }
}

int cmd_simulate(const Globals& g, const SimArgs& a) {
    TopologySpec topo = load_topology(a.topology);
    require(a.duration > 0.0, ErrorCode::InvalidArgument, "duration must be positive");
    require(a.seeds >= 1, ErrorCode::InvalidArgument, "seeds must be at least 1");
    auto sources = load_sources(topo, g);
    std::ostringstream sum, pk;
    sum << "seed,flow_id,n,mean_s,p99_s,p999_s,epsilon,quantile_s\n";
    pk << "seed,flow_id,arrival_s,departure_s,delay_s\n";
    for (int s = 0; s < a.seeds; ++s) {
        std::uint64_t seed = g.seed + static_cast<std::uint64_t>(s);
        SimConfig cfg;
        cfg.seed = seed;
        cfg.record_packets = a.packets;
        SimResult res = simulate(topo, make_packets(topo, sources, a.duration, seed, a.mtu), cfg);
        for (const auto& f : topo.flows) {
            const auto& d = res.delays.at(f.id);
            double mean = 0.0;
            for (double x : d) mean += x;
            mean = d.empty() ? std::numeric_limits<double>::quiet_NaN() : mean / static_cast<double>(d.size());
            std::string p99 = d.empty() ? "NA" : fmt(empirical_quantile(d, 0.01, false));
            std::string p999 = d.empty() ? "NA" : fmt(empirical_quantile(d, 0.001, false));
            for (double e : g.epsilon)
                sum << seed << ',' << f.id << ',' << d.size() << ',' << fmt(mean) << ',' << p99 << ',' << p999 << ','
                    << fmt(e) << ',' << quantile_or_na(d, e) << '\n';
            if (a.packets)
                for (const auto& r : res.packets.at(f.id))
                    pk << seed << ',' << f.id << ',' << fmt(r.arrival) << ',' << fmt(r.departure) << ','
                       << fmt(r.departure - r.arrival) << '\n';
        }
    }
    std::vector<std::string> outs{out_path(g, "simulation_summary.csv")};
    write_file_atomic(outs[0], sum.str());
    if (a.packets) {
        outs.push_back(out_path(g, "simulation_packets.csv"));
        write_file_atomic(outs[1], pk.str());
    }
    write_manifest(g, "simulate",
                   {{"topology", a.topology}, {"duration", a.duration}, {"seeds", a.seeds}, {"mtu", a.mtu},
                    {"packets", a.packets}},
                   outs);
    std::cout << sum.str();
    return 0;
}

struct CompareArgs {
    SimArgs sim;
    std::string baselines = "normal,exponential,cpoisson,ar1,mmoo,mmp";
    std::string r_method = "mc";
    std::size_t r_samples = 100000;
    double packet_bytes = 1500.0;
    std::size_t fit_slots = 400000;
};

int cmd_compare(const Globals& g, const CompareArgs& a) {
    TopologySpec topo = load_topology(a.sim.topology);
    require(a.sim.seeds >= 1, ErrorCode::InvalidArgument, "seeds must be at least 1");
    auto sources = load_sources(topo, g);
    std::map<std::string, DMaparHmm> models;
    for (const auto& [id, s] : sources) models.emplace(id, s.model);
    std::vector<double> grid = network_grid(g, models);
    RConfig rc = r_config(a.r_method, a.r_samples, g.seed);
    PmooOptions po;
    po.max_packet_bytes = a.packet_bytes;

    // Bounds per arrival model: the fitted dMAPAR-HMM plus each baseline fitted
    // to a synthetic trace of the same flow.
    std::map<std::string, std::vector<BoundRow>> bounds;
    bounds["dmapar"] = network_bounds(topo, models, grid, rc, po, g.epsilon, "");
    for (const auto& name : parse_name_list(a.baselines)) {
        std::map<std::string, DMaparHmm> bm;
        for (std::size_t k = 0; k < topo.flows.size(); ++k) {
            const auto& f = topo.flows[k];
            const FlowSource& src = sources.at(f.id);
            DiscretizedTrace tr;
            if (src.from_trace) {
                tr = discretize(src.trace, src.model.dt);
            } else {
                Rng rng = make_rng(g.seed ^ 0xba5e11e5ULL, k + 1);
                tr = generate(src.model, a.fit_slots, rng).trace;
                tr.a.resize(a.fit_slots, 0.0);
            }
            bm.emplace(f.id, fit_baseline(name, tr));
        }
        bounds[name] = network_bounds(topo, bm, grid, rc, po, g.epsilon, "");
    }

    std::ostringstream csv;
    csv << "model,flow_id,epsilon,seed,bound_s,quantile_s,reliable,tightness\n";
    for (int s = 0; s < a.sim.seeds; ++s) {
        std::uint64_t seed = g.seed + static_cast<std::uint64_t>(s);
        SimConfig cfg;
        cfg.seed = seed;
        SimResult res = simulate(topo, make_packets(topo, sources, a.sim.duration, seed, a.sim.mtu), cfg);
        for (const auto& [name, rows] : bounds) {
            for (const auto& r : rows) {
                const auto& d = res.delays.at(r.flow);
                std::string q = quantile_or_na(d, r.epsilon);
                csv << name << ',' << r.flow << ',' << fmt(r.epsilon) << ',' << seed << ',' << fmt(r.delay) << ','
                    << q << ',';
                if (q == "NA") {
                    csv << "NA,NA\n";
                } else {
                    Comparison c = compare_bound(d, r.delay, r.epsilon);
                    csv << (c.reliable ? 1 : 0) << ',' << fmt(c.tightness) << '\n';
                }
            }
        }
    }
    std::string path = out_path(g, "comparison.csv");
    write_file_atomic(path, csv.str());
    write_manifest(g, "compare",
                   {{"topology", a.sim.topology}, {"duration", a.sim.duration}, {"seeds", a.sim.seeds},
                    {"mtu", a.sim.mtu}, {"baselines", a.baselines}, {"grid", grid}, {"r_method", a.r_method},
                    {"r_samples", a.r_samples}, {"packet_bytes", a.packet_bytes}, {"fit_slots", a.fit_slots}},
                   {path});
    std::cout << csv.str();
    return 0;
}

struct BaselineArgs {
    std::string trace;
};

int cmd_baselines(const Globals& g, const BaselineArgs& a) {
    static const std::map<std::string, std::string> desc = {
        {"poisson", "point process over MAP(1), unit amplitudes"},
        {"cpoisson", "point process over MAP(1), i.i.d. normal amplitudes"},
        {"mmoo", "dual MAP(1)+MAP(1), constant on amplitude"},
        {"mmp", "always on, hidden-state normal amplitudes"},
        {"ar", "always on, AR(p) with normal residuals"},
        {"normal", "always on, i.i.d. normal"},
        {"exponential", "always on, i.i.d. exponential"},
        {"map", "point process over MAP(m), unit amplitudes"},
        {"bmap", "point process over MAP(m), i.i.d. batch sizes"},
    };
    if (a.trace.empty()) {
        for (const auto& n : baseline_names()) {
            auto it = desc.find(n);
            std::cout << n << "\t" << (it == desc.end() ? "" : it->second) << "\n";
        }
        return 0;
    }
    TraceSeries tr = load_trace(a.trace);
    double dt = g.dt > 0.0 ? g.dt : default_dt(tr);
    DiscretizedTrace disc = discretize(tr, dt);
    std::ostringstream csv;
    csv << "baseline,model_file,mean_slot_bytes,on_fraction\n";
    std::vector<std::string> outs;
    for (const std::string name : {"normal", "exponential", "cpoisson", "ar1", "mmoo", "mmp"}) {
        DMaparHmm m = fit_baseline(name, disc);
        std::string path = out_path(g, "baseline_" + name + ".json");
        save_model(path, m);
        outs.push_back(path);
        csv << name << ',' << path << ',' << fmt(mean_slot_bytes(m)) << ',' << fmt(on_fraction(m)) << '\n';
    }
    outs.push_back(out_path(g, "baselines.csv"));
    write_file_atomic(outs.back(), csv.str());
    write_manifest(g, "baselines", {{"trace", a.trace}, {"dt", dt}}, outs);
    std::cout << csv.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dmapar: traffic model fitting, envelopes and delay bounds"};
    app.require_subcommand(1);
    Globals g;
    for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);
    app.add_option("--seed", g.seed, "Run seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--dt", g.dt, "Slot length override in seconds (0 = mean IAT / 40)");
    app.add_option("--theta-grid", g.theta_grid, "lo:hi:n (log-spaced) or comma list, 1/bytes");
    app.add_option("--epsilon", g.epsilon, "Violation probabilities")->delimiter(',')->capture_default_str();
    app.fallthrough();

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit a model to a trace CSV");
    fit->add_option("trace,--trace", fa.trace, "Trace CSV (timestamp_s,size_bytes)")->required();
    fit->add_option("-o,--out", fa.out, "Model file (default <out-dir>/model.json)");
    fit->add_option("--m-off", fa.m_off, "MAP^off order")->capture_default_str();
    fit->add_option("--m-on", fa.m_on, "MAP^on order")->capture_default_str();
    fit->add_option("--N", fa.N, "Hidden-state candidates")->capture_default_str();
    fit->add_option("--p", fa.p, "Lag candidates")->capture_default_str();
    fit->add_option("--criterion", fa.criterion, "aic or bic")->capture_default_str();
    fit->add_option("--residual", fa.residual, "normal or exponential")->capture_default_str();
    fit->add_option("--restarts", fa.restarts, "MAP EM restarts")->capture_default_str();

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic trace from a model");
    synth->add_option("model,--model", sa.model, "Model file")->required();
    synth->add_option("--slots", sa.slots, "Number of slots")->capture_default_str();
    synth->add_option("-o,--out", sa.out, "Trace CSV (default <out-dir>/synth.csv)");

    FeatureArgs ea;
    auto* feat = app.add_subcommand("features", "Compute the (sigma, rho) envelope of a model");
    feat->add_option("model,--model", ea.model, "Model file")->required();
    feat->add_option("-o,--out", ea.out, "Envelope CSV (default <out-dir>/envelope.csv)");
    feat->add_option("--r-method", ea.r_method, "identity or mc")->capture_default_str();
    feat->add_option("--r-samples", ea.r_samples, "Monte Carlo samples for R")->capture_default_str();

    BoundArgs ba;
    auto* bound = app.add_subcommand("bound", "Delay and backlog bounds on a topology");
    bound->add_option("topology,--topology", ba.topology, "Topology JSON")->required();
    bound->add_option("--flow", ba.flow, "Restrict to one flow");
    bound->add_option("-o,--out", ba.out, "Bounds CSV (default <out-dir>/bounds.csv)");
    bound->add_option("--r-method", ba.r_method, "identity or mc")->capture_default_str();
    bound->add_option("--r-samples", ba.r_samples, "Monte Carlo samples for R")->capture_default_str();
    bound->add_option("--packet-bytes", ba.packet_bytes, "Max packet size for the per-hop allowance (0 = fluid)")
        ->capture_default_str();
    bound->add_option("--delta", ba.delta, "Equal-rate concatenation slack")->capture_default_str();

    SimArgs ma;
    auto* sim = app.add_subcommand("simulate", "Discrete-event simulation of a topology");
    sim->add_option("topology,--topology", ma.topology, "Topology JSON")->required();
    sim->add_option("--duration", ma.duration, "Simulated seconds of traffic")->capture_default_str();
    sim->add_option("--seeds", ma.seeds, "Replications (seeds seed..seed+k-1)")->capture_default_str();
    sim->add_option("--mtu", ma.mtu, "Packet size cap in bytes (0 = one packet per slot)")->capture_default_str();
    sim->add_flag("--packets", ma.packets, "Also write per-packet records");

    CompareArgs ca;
    auto* cmp = app.add_subcommand("compare", "Bounds of the model and baselines against simulation");
    cmp->add_option("topology,--topology", ca.sim.topology, "Topology JSON")->required();
    cmp->add_option("--duration", ca.sim.duration, "Simulated seconds of traffic")->capture_default_str();
    cmp->add_option("--seeds", ca.sim.seeds, "Replications")->capture_default_str();
    cmp->add_option("--mtu", ca.sim.mtu, "Packet size cap in bytes")->capture_default_str();
    cmp->add_option("--baselines", ca.baselines, "Comma list of baselines")->capture_default_str();
    cmp->add_option("--r-method", ca.r_method, "identity or mc")->capture_default_str();
    cmp->add_option("--r-samples", ca.r_samples, "Monte Carlo samples for R")->capture_default_str();
    cmp->add_option("--packet-bytes", ca.packet_bytes, "Per-hop packet allowance")->capture_default_str();
    cmp->add_option("--fit-slots", ca.fit_slots, "Synthetic slots used to fit baselines")->capture_default_str();

    BaselineArgs la;
    auto* base = app.add_subcommand("baselines", "List baselines, or fit them to a trace");
    base->add_option("--trace", la.trace, "Trace CSV to fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*fit) return cmd_fit(g, fa);
        if (*synth) return cmd_synth(g, sa);
        if (*feat) return cmd_features(g, ea);
        if (*bound) return cmd_bound(g, ba);
        if (*sim) return cmd_simulate(g, ma);
        if (*cmp) return cmd_compare(g, ca);
        if (*base) return cmd_baselines(g, la);
    } catch (const Error& e) {
        std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
