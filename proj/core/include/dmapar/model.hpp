#pragma once

#include "dmapar/arhmm.hpp"
#include "dmapar/carrier.hpp"
#include "dmapar/linalg.hpp"
#include "dmapar/rng.hpp"
#include "dmapar/trace.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dmapar {

// Joint chain Z over (carrier state, AR-HMM state), index N*carrier + i.
struct DMaparHmm {
    CarrierChain carrier;
    ArHmm arhmm;
    double dt = 0.0;
    Mat T;
    Vec pi;

    int size() const { return static_cast<int>(T.rows()); }
    int n_off_states() const { return carrier.n_off * arhmm.N; }
    bool is_on(int z) const { return z >= n_off_states(); }
    int hidden(int z) const { return z % arhmm.N; }
};

DMaparHmm build_t(const CarrierChain& carrier, const ArHmm& arhmm);
Vec stationary(const Mat& T);

struct BreveParams {
    double mu = 0.0;
    std::vector<double> phi;
    double sigma = 0.0;
};

BreveParams breve_params(const DMaparHmm& model, int z_prev, int z_next);

// Inverse-CDF sampler over the rows of T.
class PathSampler {
public:
    explicit PathSampler(const DMaparHmm& model);
    int initial(Rng& rng) const;
    int next(int z, Rng& rng) const;

private:
    int n_ = 0;
    std::vector<double> cdf_;  // n x n
    std::vector<double> pi_cdf_;
};

struct GenerateResult {
    DiscretizedTrace trace;
    std::size_t on_slots = 0;
    std::size_t clamped = 0;
    double clamp_fraction = 0.0;
};

GenerateResult generate(const DMaparHmm& model, std::size_t n_slots, Rng& rng);

// Stationary mean bytes per slot (from the unclamped AR law).
double mean_slot_bytes(const DMaparHmm& model);
double on_fraction(const DMaparHmm& model);

// Multiplies mu and sigma of every hidden state by k > 0.
DMaparHmm scale_amplitudes(const DMaparHmm& model, double k);

// Table-of-baselines constructors.
struct BaselineSpec {
    std::string name;          // poisson, cpoisson, mmoo, mmp, ar, normal, exponential, map, bmap
    double dt = 0.0;
    double lambda = 0.0;       // poisson/cpoisson: events per second
    double amp_mean = 1.0;     // cpoisson amplitude law (normal)
    double amp_std = 0.0;
    double alpha = 0.0;        // mmoo: off -> on rate, 1/s
    double beta = 0.0;         // mmoo: on -> off rate, 1/s
    double peak = 0.0;         // mmoo: bytes per on slot
    double mu = 0.0;           // normal / ar / exponential(mean)
    double sigma = 0.0;
    std::vector<double> phi;   // ar
    ArHmm hidden;              // mmp
    std::optional<DiscreteMap> map;      // map / bmap
    std::vector<double> batch_pmf;       // bmap: P(batch = k), k = 1..
    double batch_unit = 1.0;             // bmap: bytes per batch unit
};

DMaparHmm from_baseline(const BaselineSpec& spec);
std::vector<std::string> baseline_names();

// Fit one of the six benchmark models (normal, exponential, cpoisson, ar1,
// mmoo, mmp) to a slot series.
DMaparHmm fit_baseline(const std::string& name, const DiscretizedTrace& trace);

// E[exp(theta A(0,t)) | Z_0 = k] for every k by path enumeration.
struct ExactMgfOptions {
    double max_paths = 1e7;
};

Vec exact_conditional_mgf(const DMaparHmm& model, double theta, int horizon,
                          std::span<const double> initial_lags, const ExactMgfOptions& opts = {});
double exact_mgf(const DMaparHmm& model, double theta, int horizon, std::span<const double> initial_lags,
                 const Vec& z0_distribution, const ExactMgfOptions& opts = {});

// Residual MGF of mu + sigma*eps at argument s.
double residual_mgf(Residual r, double mu, double sigma, double s);

}  // namespace dmapar
