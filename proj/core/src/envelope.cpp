#include "dmapar/envelope.hpp"

#include "dmapar/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>

namespace dmapar {

namespace {

// A(i,j) and b(j) of the lag-weight recursion.
void lag_operator(const DMaparHmm& m, int i, int j, Mat& a, Vec& b) {
    const int p = m.arhmm.p;
    const double o = m.is_on(j) ? 1.0 : 0.0;
    a = Mat::Zero(p, p);
    b = Vec::Zero(p);
    for (int k = 0; k < p; ++k) a(k, k) = 1.0 - o;
    for (int k = 0; k + 1 < p; ++k) a(k, k + 1) = o;
    if (o > 0.0) {
        const int h = m.hidden(i);
        for (int k = 0; k < p; ++k) a(k, 0) += m.arhmm.phi(k, h);
    }
    b(p - 1) = o;
}

bool has_feedback(const ArHmm& a) { return a.p > 0 && a.phi.cwiseAbs().maxCoeff() > 0.0; }

double level_of(const ArHmm& a, int i) {
    double phisum = a.p > 0 ? a.phi.col(i).sum() : 0.0;
    double level = a.mu(i) + (a.residual == Residual::Exponential ? a.sigma(i) : 0.0);
    double v = level / (1.0 - phisum);
    return std::isfinite(v) ? v : 0.0;
}

}  // namespace

VSolution solve_v(const DMaparHmm& model) {
    const int S = model.size(), p = model.arhmm.p;
    VSolution sol;
    sol.p = p;
    if (p == 0) {
        sol.v = Mat::Ones(S, 1);
        return sol;
    }
    const int n = S * p;
    Mat sys = Mat::Identity(n, n);
    Vec rhs = Vec::Zero(n);
    Mat a;
    Vec b;
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < S; ++j) {
            double t = model.T(i, j);
            if (t == 0.0) continue;
            lag_operator(model, i, j, a, b);
            sys.block(i * p, j * p, p, p) -= t * a;
            rhs.segment(i * p, p) += t * b;
        }
    }
    Eigen::FullPivLU<Mat> lu(sys);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
        fail(ErrorCode::SingularSystem, "lag-weight system (I - T o A) is singular; AR part not stationary");
    Vec x = lu.solve(rhs);
    double resid = (sys * x - rhs).cwiseAbs().maxCoeff();
    if (!x.allFinite() || resid > 1e-8 * std::max(1.0, x.cwiseAbs().maxCoeff()))
        fail(ErrorCode::SingularSystem, "lag-weight system is numerically singular");
    sol.v = Mat(S, p);
    for (int i = 0; i < S; ++i) sol.v.row(i) = x.segment(i * p, p).transpose();
    // Fixed-point verification v_i = sum_j T_ij (b_j + A(i,j) v_j).
    double worst = 0.0;
    for (int i = 0; i < S; ++i) {
        Vec acc = Vec::Zero(p);
        for (int j = 0; j < S; ++j) {
            double t = model.T(i, j);
            if (t == 0.0) continue;
            lag_operator(model, i, j, a, b);
            acc += t * (b + a * sol.v.row(j).transpose());
        }
        worst = std::max(worst, (acc - sol.v.row(i).transpose()).cwiseAbs().maxCoeff());
    }
    sol.fixed_point_residual = worst;
    if (worst > 1e-8 * std::max(1.0, sol.v.cwiseAbs().maxCoeff()))
        fail(ErrorCode::SingularSystem, "lag-weight fixed point not verified");
    return sol;
}

RResult compute_r(const DMaparHmm& model, double theta, const VSolution& v, const RConfig& cfg) {
    const int S = model.size(), p = model.arhmm.p;
    RResult out;
    out.diag = Vec::Ones(S);
    out.std_error = Vec::Zero(S);
    if (cfg.method == RMethod::Identity || !has_feedback(model.arhmm)) return out;

    require(cfg.samples >= 100, ErrorCode::InvalidArgument, "monte carlo R needs at least 100 samples");
    const ArHmm& ar = model.arhmm;
    Rng rng = make_rng(cfg.seed, 0x52);
    PathSampler sampler(model);
    constexpr int kBatches = 20;
    const std::size_t per_batch = (cfg.samples + kBatches - 1) / kBatches;
    // Log-sum-exp accumulators per (batch, state).
    std::vector<double> lmax(static_cast<std::size_t>(kBatches * S), -std::numeric_limits<double>::infinity());
    std::vector<double> lsum(static_cast<std::size_t>(kBatches * S), 0.0);
    std::vector<std::size_t> cnt(static_cast<std::size_t>(kBatches * S), 0);

    int z = sampler.initial(rng);
    std::vector<double> lags(static_cast<std::size_t>(p), level_of(ar, model.hidden(z)));
    const std::size_t total = cfg.burn_in + per_batch * kBatches;
    for (std::size_t s = 0; s < total; ++s) {
        if (s >= cfg.burn_in) {
            std::size_t batch = (s - cfg.burn_in) / per_batch;
            double e = 0.0;
            for (int k = 0; k < p; ++k) e += theta * (v.v(z, k) - 1.0) * lags[static_cast<std::size_t>(k)];
            std::size_t idx = batch * static_cast<std::size_t>(S) + static_cast<std::size_t>(z);
            if (e > lmax[idx]) {
                lsum[idx] = lsum[idx] * std::exp(lmax[idx] - e) + 1.0;
                lmax[idx] = e;
            } else {
                lsum[idx] += std::exp(e - lmax[idx]);
            }
            ++cnt[idx];
        }
        int zn = sampler.next(z, rng);
        if (model.is_on(zn)) {
            int i = model.hidden(z);
            double eps = ar.residual == Residual::Normal ? standard_normal(rng) : standard_exponential(rng);
            double y = ar.mu(i) + ar.sigma(i) * eps;
            for (int l = 0; l < p; ++l) y += ar.phi(l, i) * lags[static_cast<std::size_t>(l)];
            for (int l = p - 1; l > 0; --l) lags[static_cast<std::size_t>(l)] = lags[static_cast<std::size_t>(l - 1)];
            lags[0] = y;
        }
        z = zn;
    }
    std::vector<int> missing;
    for (int i = 0; i < S; ++i) {
        double glmax = -std::numeric_limits<double>::infinity();
        std::size_t n = 0;
        for (int bt = 0; bt < kBatches; ++bt) {
            std::size_t idx = static_cast<std::size_t>(bt * S + i);
            glmax = std::max(glmax, lmax[idx]);
            n += cnt[idx];
        }
        if (n == 0) {
            missing.push_back(i);
            continue;
        }
        double total_sum = 0.0;
        std::vector<double> means;
        std::vector<double> weights;
        for (int bt = 0; bt < kBatches; ++bt) {
            std::size_t idx = static_cast<std::size_t>(bt * S + i);
            if (cnt[idx] == 0) continue;
            double scaled = lsum[idx] * std::exp(lmax[idx] - glmax);
            total_sum += scaled;
            means.push_back(scaled / static_cast<double>(cnt[idx]));
            weights.push_back(static_cast<double>(cnt[idx]));
        }
        double mean_scaled = total_sum / static_cast<double>(n);
        double var = 0.0;
        if (means.size() > 1) {
            for (double mb : means) var += (mb - mean_scaled) * (mb - mean_scaled);
            var /= static_cast<double>(means.size() - 1);
        }
        double scale = std::exp(glmax);
        out.diag(i) = mean_scaled * scale;
        out.std_error(i) = std::sqrt(var / static_cast<double>(std::max<std::size_t>(1, means.size()))) * scale;
    }
    if (!missing.empty()) {
        std::ostringstream os;
        os << "monte carlo R never visited states:";
        for (int m : missing) os << ' ' << m;
        fail(ErrorCode::MissingState, os.str());
    }
    return out;
}

Mat gamma(const DMaparHmm& model, double theta, const VSolution& v) {
    const int S = model.size();
    const ArHmm& ar = model.arhmm;
    Mat g = Mat::Zero(S, S);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < S; ++j) {
            double t = model.T(i, j);
            if (t == 0.0) continue;
            if (!model.is_on(j)) {
                g(i, j) = t;
                continue;
            }
            const int h = model.hidden(i);
            const double w = v.v(j, 0);
            const double mu = ar.mu(h), sg = ar.sigma(h);
            double psi;
            if (ar.residual == Residual::Normal) {
                psi = std::exp(theta * mu * w + 0.5 * theta * theta * sg * sg * w * w);
            } else {
                double d = 1.0 - theta * sg * w;
                if (!(d > 0.0))
                    fail(ErrorCode::DivergentMgf, "exponential residual pole at transition (" +
                                                      std::to_string(i) + "," + std::to_string(j) + ")");
                psi = std::exp(theta * mu * w) / d;
            }
            g(i, j) = psi * t;
        }
    }
    if (!g.allFinite()) fail(ErrorCode::DivergentMgf, "Gamma(theta) overflowed");
    return g;
}

namespace {

void add_flag(std::string& flags, const std::string& f) {
    if (!flags.empty()) flags += ';';
    flags += f;
}

SigmaRhoPoint compute_point(const DMaparHmm& model, double theta, const VSolution& v, const RResult& r,
                            bool power_check) {
    require(theta > 0.0 && std::isfinite(theta), ErrorCode::InvalidArgument, "theta must be positive");
    const int S = model.size();
    const double dt = model.dt;
    SigmaRhoPoint pt;
    pt.theta = theta;
    Mat g = gamma(model, theta, v);
    RowVec piR = (model.pi.array() * r.diag.array()).matrix().transpose();

    std::optional<PowerResult> pw_cache;
    auto power = [&]() -> const PowerResult& {
        if (!pw_cache) {
            pw_cache = perron_power(g);
            pt.rho_power = std::log(pw_cache->value) / (theta * dt);
        }
        return *pw_cache;
    };
    if (power_check) power();

    Eigen::EigenSolver<Mat> es(g, true);
    if (es.info() != Eigen::Success) fail(ErrorCode::NumericDegeneracy, "eigendecomposition failed");
    Eigen::VectorXcd d = es.eigenvalues();
    Eigen::MatrixXcd u = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u);
    const auto& sv = svd.singularValues();
    double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    pt.cond_u = cond;
    const bool defective = !(cond <= 1e12);

    Eigen::Index kmax = 0;
    double rad = d.cwiseAbs().maxCoeff(&kmax);
    if (defective) {
        rad = power().value;
        add_flag(pt.flags, "defective:power");
    }
    require(rad > 0.0, ErrorCode::NumericDegeneracy, "Gamma has zero spectral radius");
    pt.spectral_radius = rad;
    pt.rho = std::log(rad) / (theta * dt);
    if (power_check && std::abs(rad - power().value) > 1e-9 * rad) add_flag(pt.flags, "power-mismatch");

    Eigen::VectorXcd usum;
    if (!defective) {
        Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(S);
        Eigen::VectorXcd right = u.partialPivLu().solve(ones);
        Eigen::RowVectorXcd left = piR.cast<std::complex<double>>() * u;
        usum = left.transpose().cwiseProduct(right);
        std::complex<double> tot = usum.sum();
        if (std::abs(tot.imag()) > 1e-9 * std::abs(tot.real())) add_flag(pt.flags, "complex-residue");
        if (!(tot.real() > 0.0)) fail(ErrorCode::NumericDegeneracy, "sum of u_i is not positive");
        pt.sigma_eigensum = std::log(tot.real()) / theta;
    }

    // Burst term: sup over t of ln(pi R Gamma^t 1) - t ln r. With Gamma
    // diagonalizable, pi R Gamma^t 1 / r^t = lead + sum_k u_k (lambda_k/r)^t, so
    // the tail beyond t is bounded by lead + sum of the non-negative parts.
    bool done = false;
    if (!defective) {
        int peripheral = 0;
        for (Eigen::Index k = 0; k < d.size(); ++k)
            if (std::abs(d(k)) >= rad * (1.0 - 1e-13)) ++peripheral;
        const double lead = usum(kmax).real();
        if (peripheral == 1 && lead > 0.0) {
            std::vector<std::pair<double, double>> tail;  // coef * q^t
            for (Eigen::Index k = 0; k < d.size(); ++k) {
                if (k == kmax) continue;
                std::complex<double> mu = d(k) / rad;
                std::complex<double> uk = usum(k);
                bool real_pos = std::abs(mu.imag()) <= 1e-12 * std::abs(mu) && mu.real() >= 0.0;
                double coef = real_pos ? std::max(0.0, uk.real()) + std::abs(uk.imag()) : std::abs(uk);
                if (coef > 0.0) tail.emplace_back(coef, std::abs(mu));
            }
            auto tail_bound = [&](long t) {
                double b = lead;
                for (const auto& [c, q] : tail) b += c * std::pow(q, static_cast<double>(t));
                return std::log(b);
            };
            Vec w = Vec::Ones(S);
            double best = std::log(piR.dot(w));
            double bound = tail_bound(0);
            const long cap = 20000;
            for (long t = 1; t <= cap && bound - best > 1e-12; ++t) {
                w = (g * w) / rad;
                best = std::max(best, std::log(piR.dot(w)));
                bound = tail_bound(t);
            }
            pt.sigma = std::max(best, bound) / theta;
            add_flag(pt.flags, bound - best > 1e-9 ? "sup-tail" : "sup");
            done = true;
        }
    }
    if (!done) {
        // Perron-vector bound: Gamma^t 1 <= c^t w / min(w) with the
        // Collatz-Wielandt upper bound c = max_i (Gamma w)_i / w_i.
        const Vec& w = power().right;
        double wmin = w.minCoeff();
        if (!(wmin > 0.0)) fail(ErrorCode::NumericDegeneracy, "Perron vector is not strictly positive");
        double cw = (g * w).cwiseQuotient(w).maxCoeff();
        if (cw > rad) {
            pt.spectral_radius = cw;
            pt.rho = std::log(cw) / (theta * dt);
        }
        pt.sigma = std::log(piR.dot(w) / wmin) / theta;
        add_flag(pt.flags, "perron-bound");
    }
    pt.valid = std::isfinite(pt.sigma) && std::isfinite(pt.rho);
    return pt;
}

}  // namespace

EnvelopeEngine::EnvelopeEngine(const DMaparHmm& model, RConfig r)
    : model_(model), r_(r), v_(solve_v(model)) {
    r_identity_ = r_.method == RMethod::Identity || !has_feedback(model_.arhmm);
}

SigmaRhoPoint EnvelopeEngine::point(double theta) const { return point(theta, r_.power_check); }

SigmaRhoPoint EnvelopeEngine::point(double theta, bool power_check) const {
    if (auto it = cache_.find({theta, true}); it != cache_.end()) return it->second;
    if (auto it = cache_.find({theta, power_check}); it != cache_.end()) return it->second;
    RResult r = compute_r(model_, theta, v_, r_);
    SigmaRhoPoint pt = compute_point(model_, theta, v_, r, power_check);
    if (!r_identity_) add_flag(pt.flags, "R:monte-carlo");
    cache_.emplace(std::make_pair(theta, power_check), pt);
    return pt;
}

double EnvelopeEngine::effective_bandwidth(double theta, std::size_t t_slots) const {
    require(theta > 0.0, ErrorCode::InvalidArgument, "theta must be positive");
    require(t_slots >= 1, ErrorCode::InvalidArgument, "t must be at least one slot");
    RResult r = compute_r(model_, theta, v_, r_);
    Mat g = gamma(model_, theta, v_);
    RowVec piR = (model_.pi.array() * r.diag.array()).matrix().transpose();
    Vec w = Vec::Ones(model_.size());
    double logscale = 0.0;
    for (std::size_t t = 0; t < t_slots; ++t) {
        w = g * w;
        double m = w.cwiseAbs().maxCoeff();
        w /= m;
        logscale += std::log(m);
    }
    double lnm = logscale + std::log(piR.dot(w));
    return lnm / (theta * static_cast<double>(t_slots) * model_.dt);
}

SigmaRhoPoint sigma_rho(const DMaparHmm& model, double theta, const RConfig& r) {
    return EnvelopeEngine(model, r).point(theta);
}

double effective_bandwidth(const DMaparHmm& model, double theta, std::size_t t_slots, const RConfig& r) {
    return EnvelopeEngine(model, r).effective_bandwidth(theta, t_slots);
}

std::vector<SigmaRhoPoint> envelope_curve(const DMaparHmm& model, const std::vector<double>& theta_grid,
                                          const RConfig& r) {
    for (std::size_t k = 0; k < theta_grid.size(); ++k) {
        require(theta_grid[k] > 0.0, ErrorCode::InvalidArgument, "theta grid must be positive");
        if (k > 0)
            require(theta_grid[k] > theta_grid[k - 1], ErrorCode::InvalidArgument,
                    "theta grid must be strictly increasing");
    }
    EnvelopeEngine eng(model, r);
    std::vector<SigmaRhoPoint> out;
    out.reserve(theta_grid.size());
    for (double th : theta_grid) {
        try {
            out.push_back(eng.point(th));
        } catch (const Error& e) {
            SigmaRhoPoint pt;
            pt.theta = th;
            pt.valid = false;
            pt.error = e.what();
            pt.flags = error_code_name(e.code());
            pt.sigma = std::numeric_limits<double>::quiet_NaN();
            pt.rho = std::numeric_limits<double>::quiet_NaN();
            out.push_back(pt);
        }
    }
    return out;
}

DeviationReport phi_deviation_bound(const DMaparHmm& model, int horizon, std::size_t n_paths,
                                    std::uint64_t seed) {
    const int S = model.size(), p = model.arhmm.p;
    require(p >= 1, ErrorCode::InvalidArgument, "deviation bound needs p >= 1");
    require(horizon >= 1, ErrorCode::InvalidArgument, "horizon must be at least 1");
    VSolution v = solve_v(model);
    DeviationReport rep;
    Mat a;
    Vec b;
    // epsilon over transitions that can occur.
    double eps = 0.0;
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < S; ++j) {
            if (model.T(i, j) <= 0.0) continue;
            lag_operator(model, i, j, a, b);
            Vec first = Vec::Ones(p) - v.v.row(i).transpose();
            if (model.is_on(j))
                for (int k = 0; k < p; ++k) first(k) += model.arhmm.phi(k, model.hidden(i));
            eps = std::max(eps, first.cwiseAbs().maxCoeff());
            Vec second = b + a * v.v.row(j).transpose() - v.v.row(i).transpose();
            eps = std::max(eps, second.cwiseAbs().maxCoeff());
        }
    }
    rep.epsilon = eps;
    Rng rng = make_rng(seed, 0xde);
    PathSampler sampler(model);
    std::vector<int> z(static_cast<std::size_t>(horizon + 1));
    Vec phi(p), c(p);
    for (std::size_t n = 0; n < n_paths; ++n) {
        z[0] = sampler.initial(rng);
        for (int s = 1; s <= horizon; ++s) z[static_cast<std::size_t>(s)] = sampler.next(z[static_cast<std::size_t>(s - 1)], rng);
        phi.setOnes();
        for (int s = horizon - 1; s >= 0; --s) {
            int zs = z[static_cast<std::size_t>(s)], zn = z[static_cast<std::size_t>(s + 1)];
            lag_operator(model, zs, zn, a, b);
            Vec next_phi = b + a * phi;
            if (s == horizon - 1)
                c.setOnes();
            else
                c = Vec::Ones(p) + a.cwiseAbs() * c;
            phi = next_phi;
            Vec dev = (phi - v.v.row(zs).transpose()).cwiseAbs();
            rep.c_max = std::max(rep.c_max, c.maxCoeff());
            rep.observed_max_dev = std::max(rep.observed_max_dev, dev.maxCoeff());
            for (int k = 0; k < p; ++k) {
                ++rep.checks;
                double bound = c(k) * eps;
                if (dev(k) > bound + 1e-12) ++rep.violations;
                if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, dev(k) / bound);
            }
        }
    }
    rep.holds = rep.violations == 0;
    return rep;
}

}  // namespace dmapar
