#pragma once

#include "dmapar/model.hpp"

#include <string>
#include <vector>

namespace dmapar {

struct ModelFitOptions {
    int m_off = 2;
    int m_on = 2;
    std::vector<int> N_candidates{1, 2};
    std::vector<int> p_candidates{0, 1};
    Criterion criterion = Criterion::BIC;
    Residual residual = Residual::Normal;
    MapFitOptions map{.max_iter = 100, .tol = 1e-7, .restarts = 3, .seed = 1};  // seeds the discrete refinement
};

struct ModelFitReport {
    double dt = 0.0;
    std::size_t slots = 0;
    std::size_t on_slots = 0;
    int m_off = 0;
    int m_on = 0;
    int N = 0;
    int p = 0;
    double map_off_log_likelihood = 0.0;
    double map_on_log_likelihood = 0.0;
    std::vector<OrderCandidate> candidates;
    double on_fraction_data = 0.0;
    double on_fraction_model = 0.0;
    double mean_slot_data = 0.0;
    double mean_slot_model = 0.0;
    std::vector<std::string> notes;
};

struct ModelFit {
    DMaparHmm model;
    ModelFitReport report;
};

// Discretized trace -> demodulation -> MAP^off, MAP^on and AR-HMM fits -> joint model.
ModelFit fit_model(const DiscretizedTrace& trace, const ModelFitOptions& opts = {});

// Continuous fit to run lengths (slots * dt), discretized at dt, then refined by
// discrete-time EM on the slot counts. Rates too fast for dt are capped before
// discretizing so that every D0 diagonal stays non-negative. The reported
// log-likelihood is that of the discrete fit.
DiscreteMap fit_run_lengths(const std::vector<std::uint64_t>& runs, double dt, int m, const MapFitOptions& opts,
                            double* log_likelihood = nullptr, std::vector<std::string>* notes = nullptr);

}  // namespace dmapar
