#include "dmapar/fit.hpp"

#include "dmapar/error.hpp"

#include <numeric>

namespace dmapar {

DiscreteMap fit_run_lengths(const std::vector<std::uint64_t>& runs, double dt, int m, const MapFitOptions& opts,
                            double* log_likelihood, std::vector<std::string>* notes) {
    require(dt > 0.0, ErrorCode::InvalidDt, "dt must be positive");
    std::vector<double> x(runs.size());
    for (std::size_t k = 0; k < runs.size(); ++k) x[k] = static_cast<double>(runs[k]) * dt;
    int order = m;
    while (order > 1 && x.size() < static_cast<std::size_t>(10 * (2 * order * order - order))) --order;
    if (order != m && notes) notes->push_back("MAP order reduced to " + std::to_string(order) + " (few runs)");
    MapFitResult fit = fit_map_em(x, order, opts);
    if (log_likelihood) *log_likelihood = fit.log_likelihood;
    ContinuousMap c = fit.map;
    bool capped = false;
    for (int i = 0; i < c.m(); ++i) {
        double nu = -c.C0(i, i);
        if (nu * dt >= 1.0) {
            double f = (1.0 - 1e-9) / (nu * dt);
            c.C0.row(i) *= f;
            c.C1.row(i) *= f;
            capped = true;
        }
    }
    if (capped && notes) notes->push_back("MAP rates capped at 1/dt");
    DiscreteMapFit refined = refine_discrete_map(runs, discretize_map(c, dt), fit.pi0);
    if (log_likelihood) *log_likelihood = refined.log_likelihood;
    if (notes)
        notes->push_back("discrete EM refinement: " + std::to_string(refined.iterations) + " iterations");
    return refined.map;
}

ModelFit fit_model(const DiscretizedTrace& trace, const ModelFitOptions& opts) {
    require(trace.dt > 0.0, ErrorCode::InvalidDt, "trace dt must be positive");
    DemodulatedTrace d = demodulate(trace);
    if (d.y.empty()) fail(ErrorCode::NoArrivals, "trace has no on slots");
    ModelFit out;
    ModelFitReport& rep = out.report;
    rep.dt = trace.dt;
    rep.slots = trace.a.size();
    rep.on_slots = d.y.size();
    rep.on_fraction_data = static_cast<double>(rep.on_slots) / static_cast<double>(rep.slots);
    rep.mean_slot_data = std::accumulate(trace.a.begin(), trace.a.end(), 0.0) / static_cast<double>(rep.slots);

    CarrierMode mode;
    if (d.tau_off.empty()) {
        mode = CarrierMode::always_on(trace.dt);
        rep.notes.push_back("no off runs: always-on carrier");
    } else {
        MapFitOptions mo = opts.map;
        DiscreteMap off = fit_run_lengths(d.tau_off, trace.dt, opts.m_off, mo, &rep.map_off_log_likelihood, &rep.notes);
        mo.seed = opts.map.seed + 1;
        DiscreteMap on = fit_run_lengths(d.tau_on, trace.dt, opts.m_on, mo, &rep.map_on_log_likelihood, &rep.notes);
        rep.m_off = off.m();
        rep.m_on = on.m();
        mode = CarrierMode::dual(off, on);
    }
    OrderSelection sel = select_order(d.y, opts.N_candidates, opts.p_candidates, opts.criterion, opts.residual);
    rep.N = sel.N;
    rep.p = sel.p;
    rep.candidates = sel.candidates;
    out.model = build_t(build_q(mode), sel.model);
    rep.on_fraction_model = on_fraction(out.model);
    rep.mean_slot_model = mean_slot_bytes(out.model);
    return out;
}

}  // namespace dmapar
