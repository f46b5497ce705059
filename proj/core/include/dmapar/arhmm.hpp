#pragma once

#include "dmapar/linalg.hpp"
#include "dmapar/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dmapar {

enum class Residual { Normal, Exponential };

const char* residual_name(Residual r);
Residual parse_residual(const std::string& s);

// y_{t+1} = mu(X_t) + sum_l phi_l(X_t) y_{t+1-l} + sigma(X_t) eps_{t+1}
struct ArHmm {
    int N = 1;
    int p = 0;
    Mat P;        // N x N, row-stochastic
    Vec mu;       // N
    Mat phi;      // p x N, phi(l-1, i) is the lag-l coefficient of state i
    Vec sigma;    // N
    Residual residual = Residual::Normal;
    Vec pi0;      // N

    void validate(double tol = 1e-10) const;
};

ArHmm make_arhmm(int N, int p, Residual residual = Residual::Normal);

double residual_density(Residual r, double z);

// Conditional density of y under each state; lags[0] is the most recent value.
Vec emission_weights(const ArHmm& model, double y, std::span<const double> lags);

// Sufficient statistics of the recursive filter. Arrays carry the index of
// the current hidden state first (joint form); summing it out gives the
// expected counts used by the M-step.
struct EmState {
    int N = 0;
    int p = 0;
    Vec Pi;                    // predictive distribution of the current state
    Mat O;                     // [k, i]
    std::vector<Mat> J;        // J[j](k, i): transitions i -> j
    std::vector<Mat> F;        // F[l](k, i), l = 0..p
    std::vector<Mat> H;        // H[l*(p+1)+r](k, i)
    std::vector<double> lags;  // last p observations, most recent first
    std::size_t steps = 0;
    double log_likelihood = 0.0;
    bool sigma_clamped = false;
};

EmState init_em_state(const ArHmm& model, std::span<const double> initial_lags);

// One E-step update; the M-step runs when `m_step` is set.
void em_step(EmState& state, ArHmm& model, double y, bool m_step = true);

// M-step from the current statistics; returns true when a variance was clamped.
bool em_m_step(const EmState& state, ArHmm& model);

struct ArHmmFitOptions {
    std::size_t burn_in = 0;   // 0 selects max(50, 10 N (p+2))
    int passes = 1;            // additional passes restart the statistics
    std::size_t start = 0;     // first observation used as a target (>= p)
};

struct ArHmmFit {
    ArHmm model;
    double log_likelihood = 0.0;  // of the final model on the fitted targets
    std::size_t n = 0;            // number of targets
    bool sigma_clamped = false;
};

ArHmm initial_arhmm(std::span<const double> y, int N, int p, Residual residual);
ArHmmFit fit_arhmm(std::span<const double> y, int N, int p, Residual residual = Residual::Normal,
                   const ArHmmFitOptions& opts = {});

// Forward-filter log-likelihood of y[start..] using y[start-p..start) as lags.
double arhmm_log_likelihood(const ArHmm& model, std::span<const double> y, std::size_t start);

enum class Criterion { AIC, BIC };

struct OrderCandidate {
    int N = 0;
    int p = 0;
    bool ok = false;
    double log_likelihood = 0.0;
    double score = 0.0;
    std::string error;
};

struct OrderSelection {
    int N = 0;
    int p = 0;
    ArHmm model;
    std::vector<OrderCandidate> candidates;
};

int arhmm_parameter_count(int N, int p);
OrderSelection select_order(std::span<const double> y, const std::vector<int>& N_candidates,
                            const std::vector<int>& p_candidates, Criterion criterion,
                            Residual residual = Residual::Normal);

// Companion-matrix spectral radius of each state below 1 - 1e-9.
bool is_stationary(const ArHmm& model);
double companion_radius(const ArHmm& model, int state);

std::vector<double> sample_arhmm(const ArHmm& model, std::size_t n, Rng& rng);

}  // namespace dmapar
