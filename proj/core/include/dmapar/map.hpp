#pragma once

#include "dmapar/linalg.hpp"
#include "dmapar/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dmapar {

// Continuous-time MAP: C0 holds transitions without an arrival, C1 with one.
struct ContinuousMap {
    Mat C0;
    Mat C1;

    int m() const { return static_cast<int>(C0.rows()); }
    void validate(double tol = 1e-12) const;
};

// Discrete-time MAP over slots of length dt.
struct DiscreteMap {
    Mat D0;
    Mat D1;
    double dt = 0.0;

    int m() const { return static_cast<int>(D0.rows()); }
    void validate(double tol = 1e-12) const;
};

DiscreteMap discretize_map(const ContinuousMap& cmap, double dt);

struct MapFitOptions {
    int max_iter = 500;
    double tol = 1e-7;
    int restarts = 5;
    std::uint64_t seed = 1;
};

struct MapFitResult {
    ContinuousMap map;
    Vec pi0;                         // phase distribution at the first interval
    double log_likelihood = 0.0;
    std::vector<double> history;     // per-iteration log-likelihood of the returned run
    int iterations = 0;
    int restart_index = 0;
};

// EM on an inter-arrival sequence (seconds).
MapFitResult fit_map_em(std::span<const double> iats, int m, const MapFitOptions& opts = {});
ContinuousMap fit_map(std::span<const double> iats, int m, const MapFitOptions& opts = {});

double map_log_likelihood(const ContinuousMap& cmap, const Vec& pi0, std::span<const double> iats);

// Stationary phase distribution just after an arrival.
Vec map_embedded_stationary(const ContinuousMap& cmap);
Vec map_embedded_stationary(const DiscreteMap& dmap);

// k-th raw moment of the stationary inter-arrival time.
double map_iat_moment(const ContinuousMap& cmap, int k);
// Lag-1 autocorrelation of consecutive inter-arrival times.
double map_iat_lag1_corr(const ContinuousMap& cmap);

struct DiscreteMapFit {
    DiscreteMap map;
    Vec pi0;
    double log_likelihood = 0.0;
    int iterations = 0;
};

// Baum-Welch on slot counts between arrivals (each count >= 1), starting from
// `init`. Stops when the log-likelihood gain drops below tol * |ll|.
DiscreteMapFit refine_discrete_map(std::span<const std::uint64_t> counts, const DiscreteMap& init, const Vec& pi0,
                                   int max_iter = 200, double tol = 1e-9);

// Slot counts between consecutive arrivals of the discrete chain.
std::vector<std::uint64_t> sample_map(const DiscreteMap& dmap, std::size_t n_events, Rng& rng);

}  // namespace dmapar
