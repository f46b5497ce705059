#pragma once

#include "dmapar/linalg.hpp"
#include "dmapar/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dmapar {

// v_k = E[W_s | Z_s = k], one p-vector per joint state (a column of ones when p = 0).
struct VSolution {
    int p = 0;
    Mat v;  // |S| x max(p, 1)
    double fixed_point_residual = 0.0;
};

VSolution solve_v(const DMaparHmm& model);

enum class RMethod { Identity, MonteCarlo };

struct RConfig {
    RMethod method = RMethod::MonteCarlo;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    std::size_t burn_in = 1000;
    bool power_check = true;  // cross-check the spectral radius by power iteration
};

struct RResult {
    Vec diag;
    Vec std_error;
};

// Identity unless p >= 1 with some phi != 0, where it is estimated from a
// stationary sample path.
RResult compute_r(const DMaparHmm& model, double theta, const VSolution& v, const RConfig& cfg);

// The per-slot kernel Gamma(theta) = [psi_ij(theta)] o T.
Mat gamma(const DMaparHmm& model, double theta, const VSolution& v);

struct SigmaRhoPoint {
    double theta = 0.0;        // 1/bytes
    double sigma = 0.0;        // bytes
    double rho = 0.0;          // bytes/second
    bool valid = false;
    std::string flags;         // ';'-separated method notes
    std::string error;
    double spectral_radius = 0.0;   // of Gamma(theta), per slot
    double rho_power = 0.0;         // bytes/second, power-iteration cross-check
    double sigma_eigensum = 0.0;    // bytes, ln(Re sum u_i)/theta
    double cond_u = 0.0;
};

SigmaRhoPoint sigma_rho(const DMaparHmm& model, double theta, const RConfig& r = {});

double effective_bandwidth(const DMaparHmm& model, double theta, std::size_t t_slots,
                           const RConfig& r = {});

std::vector<SigmaRhoPoint> envelope_curve(const DMaparHmm& model, const std::vector<double>& theta_grid,
                                          const RConfig& r = {});

// Reuses v (and the model) across theta values.
class EnvelopeEngine {
public:
    explicit EnvelopeEngine(const DMaparHmm& model, RConfig r = {});
    SigmaRhoPoint point(double theta) const;
    SigmaRhoPoint point(double theta, bool power_check) const;
    double effective_bandwidth(double theta, std::size_t t_slots) const;
    const DMaparHmm& model() const { return model_; }
    const VSolution& v() const { return v_; }

private:
    DMaparHmm model_;
    RConfig r_;
    VSolution v_;
    bool r_identity_ = true;
    mutable std::map<std::pair<double, bool>, SigmaRhoPoint> cache_;
};

struct DeviationReport {
    double epsilon = 0.0;
    double c_max = 0.0;
    double observed_max_dev = 0.0;
    double max_ratio = 0.0;      // max over entries of dev / (c * epsilon), 0 when epsilon = 0
    std::size_t violations = 0;  // entries with dev > c * epsilon + 1e-12
    std::size_t checks = 0;
    bool holds = true;
};

DeviationReport phi_deviation_bound(const DMaparHmm& model, int horizon, std::size_t n_paths = 10000,
                                    std::uint64_t seed = 1);

}  // namespace dmapar
