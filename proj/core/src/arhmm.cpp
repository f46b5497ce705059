#include "dmapar/arhmm.hpp"

#include "dmapar/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace dmapar {

const char* residual_name(Residual r) {
    return r == Residual::Normal ? "normal" : "exponential";
}

Residual parse_residual(const std::string& s) {
    if (s == "normal") return Residual::Normal;
    if (s == "exponential") return Residual::Exponential;
    fail(ErrorCode::InvalidArgument, "unknown residual kind '" + s + "'");
}

void ArHmm::validate(double tol) const {
    require(N >= 1 && p >= 0, ErrorCode::InvalidArgument, "AR-HMM needs N >= 1 and p >= 0");
    require(P.rows() == N && P.cols() == N && mu.size() == N && sigma.size() == N &&
                pi0.size() == N && phi.rows() == p && phi.cols() == N,
            ErrorCode::InvalidArgument, "AR-HMM parameter shapes are inconsistent");
    require(P.allFinite() && mu.allFinite() && sigma.allFinite() && phi.allFinite() && pi0.allFinite(),
            ErrorCode::InvalidArgument, "AR-HMM parameters must be finite");
    require(P.minCoeff() >= 0.0 && row_sum_error(P) <= tol, ErrorCode::InvalidArgument,
            "AR-HMM transition matrix must be row-stochastic");
    require(pi0.minCoeff() >= 0.0 && std::abs(pi0.sum() - 1.0) <= tol, ErrorCode::InvalidArgument,
            "AR-HMM initial distribution must sum to one");
    require(sigma.minCoeff() >= 0.0, ErrorCode::InvalidArgument, "AR-HMM sigma must be non-negative");
}

ArHmm make_arhmm(int N, int p, Residual residual) {
    require(N >= 1 && p >= 0, ErrorCode::InvalidArgument, "AR-HMM needs N >= 1 and p >= 0");
    ArHmm m;
    m.N = N;
    m.p = p;
    m.P = Mat::Identity(N, N);
    m.mu = Vec::Zero(N);
    m.phi = Mat::Zero(p, N);
    m.sigma = Vec::Zero(N);
    m.residual = residual;
    m.pi0 = Vec::Constant(N, 1.0 / N);
    return m;
}

double residual_density(Residual r, double z) {
    if (r == Residual::Normal) return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return z >= 0.0 ? std::exp(-z) : 0.0;
}

namespace {

constexpr double kPointMassFloor = 1e-300;

double log_residual_density(Residual r, double z) {
    if (r == Residual::Normal) return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
    return z >= 0.0 ? -z : -std::numeric_limits<double>::infinity();
}

double predict(const ArHmm& m, int i, std::span<const double> lags) {
    double v = m.mu(i);
    for (int l = 0; l < m.p; ++l) v += m.phi(l, i) * lags[static_cast<std::size_t>(l)];
    return v;
}

Vec log_emission(const ArHmm& model, double y, std::span<const double> lags) {
    Vec lw(model.N);
    for (int i = 0; i < model.N; ++i) {
        double e = y - predict(model, i, lags);
        double s = model.sigma(i);
        if (s > 0.0)
            lw(i) = log_residual_density(model.residual, e / s) - std::log(s);
        else
            lw(i) = e == 0.0 ? 0.0 : std::log(kPointMassFloor);
    }
    return lw;
}

}  // namespace

Vec emission_weights(const ArHmm& model, double y, std::span<const double> lags) {
    require(static_cast<int>(lags.size()) >= model.p, ErrorCode::InvalidArgument,
            "emission_weights needs p lag values");
    Vec w(model.N);
    for (int i = 0; i < model.N; ++i) {
        double e = y - predict(model, i, lags);
        double s = model.sigma(i);
        if (s > 0.0)
            w(i) = residual_density(model.residual, e / s) / s;
        else
            w(i) = e == 0.0 ? 1.0 : kPointMassFloor;
    }
    return w;
}

EmState init_em_state(const ArHmm& model, std::span<const double> initial_lags) {
    model.validate();
    require(static_cast<int>(initial_lags.size()) >= model.p, ErrorCode::InvalidArgument,
            "EM state needs p initial lags");
    EmState s;
    s.N = model.N;
    s.p = model.p;
    const int N = model.N, q = model.p + 1;
    s.Pi = model.pi0;
    s.O = Mat::Zero(N, N);
    s.J.assign(static_cast<std::size_t>(N), Mat::Zero(N, N));
    s.F.assign(static_cast<std::size_t>(q), Mat::Zero(N, N));
    s.H.assign(static_cast<std::size_t>(q * q), Mat::Zero(N, N));
    s.lags.assign(initial_lags.begin(), initial_lags.begin() + model.p);
    return s;
}

void em_step(EmState& st, ArHmm& model, double y, bool m_step) {
    const int N = model.N, p = model.p, q = p + 1;
    Vec lw = log_emission(model, y, st.lags);
    double lmax = lw.maxCoeff();
    if (!std::isfinite(lmax))
        fail(ErrorCode::Underflow, "all emission weights vanish at step " + std::to_string(st.steps) +
                                       "; rescale the observations");
    Vec w = (lw.array() - lmax).exp().matrix();
    Vec b = w.cwiseProduct(st.Pi);
    double c = b.sum();
    if (!(c > 0.0) || !std::isfinite(c))
        fail(ErrorCode::Underflow, "filter normalizer vanished at step " + std::to_string(st.steps) +
                                       "; rescale the observations");
    b /= c;
    st.log_likelihood += std::log(c) + lmax;

    Mat Q = model.P.transpose();
    Mat G = Q * (w / c).asDiagonal();

    std::vector<double> ylag(static_cast<std::size_t>(q));
    ylag[0] = y;
    for (int l = 1; l <= p; ++l) ylag[static_cast<std::size_t>(l)] = st.lags[static_cast<std::size_t>(l - 1)];

    st.O = G * st.O;
    for (int j = 0; j < N; ++j) st.J[static_cast<std::size_t>(j)] = G * st.J[static_cast<std::size_t>(j)];
    for (auto& f : st.F) f = G * f;
    for (auto& h : st.H) h = G * h;
    for (int i = 0; i < N; ++i) {
        Vec qi = Q.col(i) * b(i);
        st.O.col(i) += qi;
        for (int j = 0; j < N; ++j) st.J[static_cast<std::size_t>(j)](j, i) += b(i) * Q(j, i);
        for (int l = 0; l < q; ++l) {
            st.F[static_cast<std::size_t>(l)].col(i) += qi * ylag[static_cast<std::size_t>(l)];
            for (int r = 0; r < q; ++r)
                st.H[static_cast<std::size_t>(l * q + r)].col(i) +=
                    qi * (ylag[static_cast<std::size_t>(l)] * ylag[static_cast<std::size_t>(r)]);
        }
    }
    st.Pi = Q * b;
    st.Pi /= st.Pi.sum();

    if (p > 0) {
        for (int l = p - 1; l > 0; --l)
            st.lags[static_cast<std::size_t>(l)] = st.lags[static_cast<std::size_t>(l - 1)];
        st.lags[0] = y;
    }
    ++st.steps;
    if (m_step && em_m_step(st, model)) st.sigma_clamped = true;
}

bool em_m_step(const EmState& st, ArHmm& model) {
    const int N = model.N, p = model.p, q = p + 1;
    ArHmm next = model;
    bool clamped = false;
    for (int i = 0; i < N; ++i) {
        double o = st.O.col(i).sum();
        if (!(o > 1e-8)) continue;
        double jsum = 0.0;
        Vec row(N);
        for (int j = 0; j < N; ++j) {
            row(j) = std::max(0.0, st.J[static_cast<std::size_t>(j)].col(i).sum());
            jsum += row(j);
        }
        if (jsum > 0.0) next.P.row(i) = (row / jsum).transpose();

        // Weighted least squares on (intercept, phi_1..phi_p).
        auto fbar = [&](int l) { return st.F[static_cast<std::size_t>(l)].col(i).sum(); };
        auto hbar = [&](int l, int r) { return st.H[static_cast<std::size_t>(l * q + r)].col(i).sum(); };
        Mat g(q, q);
        Vec rhs(q);
        g(0, 0) = o;
        rhs(0) = fbar(0);
        for (int l = 1; l <= p; ++l) {
            g(0, l) = g(l, 0) = fbar(l);
            rhs(l) = hbar(0, l);
            for (int r = 1; r <= p; ++r) g(l, r) = hbar(l, r);
        }
        Vec beta(q);
        beta(0) = model.mu(i);
        for (int l = 1; l <= p; ++l) beta(l) = model.phi(l - 1, i);
        if (model.residual == Residual::Exponential) beta(0) += model.sigma(i);
        if (p == 0) {
            beta(0) = rhs(0) / o;
        } else {
            Eigen::LDLT<Mat> ldlt(g);
            Vec sol = ldlt.solve(rhs);
            double cond_ok = ldlt.rcond();
            if (ldlt.info() == Eigen::Success && sol.allFinite() && cond_ok > 1e-13) {
                beta = sol;
            } else {
                // Gauss-Seidel sweep when the normal equations are near singular.
                for (int l = 0; l < q; ++l) {
                    if (!(g(l, l) > 0.0)) continue;
                    double acc = rhs(l);
                    for (int r = 0; r < q; ++r)
                        if (r != l) acc -= g(l, r) * beta(r);
                    beta(l) = acc / g(l, l);
                }
            }
        }
        double rss = hbar(0, 0) - 2.0 * beta.dot(rhs) + beta.dot(g * beta);
        double var = rss / o;
        double s;
        if (var < 1e-12) {
            var = 1e-12;
            clamped = true;
        }
        s = std::sqrt(var);
        next.sigma(i) = s;
        next.mu(i) = model.residual == Residual::Exponential ? beta(0) - s : beta(0);
        for (int l = 1; l <= p; ++l) next.phi(l - 1, i) = beta(l);
    }
    model = next;
    return clamped;
}

ArHmm initial_arhmm(std::span<const double> y, int N, int p, Residual residual) {
    require(!y.empty(), ErrorCode::InsufficientData, "AR-HMM initialization needs data");
    ArHmm m = make_arhmm(N, p, residual);
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double var = 0.0;
    for (double v : sorted) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / n);
    if (!(sd > 0.0)) sd = 1e-6 * (std::abs(mean) + 1.0);
    for (int i = 0; i < N; ++i) {
        std::size_t lo = static_cast<std::size_t>(std::floor(n * i / N));
        std::size_t hi = std::max(lo + 1, static_cast<std::size_t>(std::floor(n * (i + 1) / N)));
        hi = std::min(hi, sorted.size());
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += sorted[k];
        double bin_mean = s / static_cast<double>(hi - lo);
        if (residual == Residual::Normal) {
            m.mu(i) = bin_mean;
            m.sigma(i) = sd;
        } else {
            double floor_v = sorted[lo] - 1e-9 * (std::abs(sorted[lo]) + 1.0);
            m.mu(i) = std::min(floor_v, sorted.front());
            m.sigma(i) = std::max(bin_mean - m.mu(i), 1e-9);
        }
    }
    if (N > 1) {
        m.P = Mat::Constant(N, N, 0.1 / (N - 1));
        m.P.diagonal().setConstant(0.9);
    }
    return m;
}

ArHmmFit fit_arhmm(std::span<const double> y, int N, int p, Residual residual,
                   const ArHmmFitOptions& opts) {
    const std::size_t start = std::max<std::size_t>(opts.start, static_cast<std::size_t>(p));
    const std::size_t burn = opts.burn_in > 0
                                 ? opts.burn_in
                                 : std::max<std::size_t>(50, static_cast<std::size_t>(10 * N * (p + 2)));
    if (y.size() < start + burn + 1)
        fail(ErrorCode::InsufficientData, "AR-HMM fit needs more than " + std::to_string(start + burn) +
                                              " observations");
    ArHmm model = initial_arhmm(y.subspan(start), N, p, residual);
    ArHmmFit out;
    for (int pass = 0; pass < std::max(1, opts.passes); ++pass) {
        std::vector<double> lags;
        for (int l = 1; l <= p; ++l) lags.push_back(y[start - static_cast<std::size_t>(l)]);
        EmState st = init_em_state(model, lags);
        for (std::size_t t = start; t < y.size(); ++t) em_step(st, model, y[t], st.steps + 1 >= burn);
        out.sigma_clamped = out.sigma_clamped || st.sigma_clamped;
    }
    if (N > 1) {
        try {
            model.pi0 = stationary_distribution(model.P);
        } catch (const Error&) {
        }
    }
    out.model = model;
    out.n = y.size() - start;
    out.log_likelihood = arhmm_log_likelihood(model, y, start);
    return out;
}

double arhmm_log_likelihood(const ArHmm& model, std::span<const double> y, std::size_t start) {
    require(start >= static_cast<std::size_t>(model.p), ErrorCode::InvalidArgument,
            "likelihood start must leave p lags");
    Vec pi = model.pi0;
    Mat Q = model.P.transpose();
    std::vector<double> lags(static_cast<std::size_t>(model.p));
    double ll = 0.0;
    for (std::size_t t = start; t < y.size(); ++t) {
        for (int l = 1; l <= model.p; ++l) lags[static_cast<std::size_t>(l - 1)] = y[t - static_cast<std::size_t>(l)];
        Vec lw = log_emission(model, y[t], lags);
        double lmax = lw.maxCoeff();
        if (!std::isfinite(lmax)) return -std::numeric_limits<double>::infinity();
        Vec b = (lw.array() - lmax).exp().matrix().cwiseProduct(pi);
        double c = b.sum();
        if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += std::log(c) + lmax;
        pi = Q * (b / c);
    }
    return ll;
}

int arhmm_parameter_count(int N, int p) { return N * (N - 1) + N * (p + 2); }

OrderSelection select_order(std::span<const double> y, const std::vector<int>& N_candidates,
                            const std::vector<int>& p_candidates, Criterion criterion,
                            Residual residual) {
    require(!N_candidates.empty() && !p_candidates.empty(), ErrorCode::InvalidArgument,
            "select_order needs non-empty candidate sets");
    std::vector<int> Ns = N_candidates, ps = p_candidates;
    std::sort(Ns.begin(), Ns.end());
    Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    const std::size_t start = static_cast<std::size_t>(ps.back());
    OrderSelection sel;
    bool have = false;
    double best = std::numeric_limits<double>::infinity();
    const bool single = Ns.size() == 1 && ps.size() == 1;
    for (int N : Ns) {
        for (int p : ps) {
            OrderCandidate cand;
            cand.N = N;
            cand.p = p;
            try {
                ArHmmFitOptions o;
                o.start = start;
                ArHmmFit fit = fit_arhmm(y, N, p, residual, o);
                cand.log_likelihood = fit.log_likelihood;
                double k = arhmm_parameter_count(N, p);
                double n = static_cast<double>(fit.n);
                cand.score = criterion == Criterion::AIC ? 2.0 * k - 2.0 * fit.log_likelihood
                                                         : k * std::log(n) - 2.0 * fit.log_likelihood;
                cand.ok = std::isfinite(cand.score) && is_stationary(fit.model);
                if (!is_stationary(fit.model)) cand.error = "fitted model is not stationary";
                if (cand.ok && (single || cand.score < best)) {
                    best = cand.score;
                    sel.N = N;
                    sel.p = p;
                    sel.model = fit.model;
                    have = true;
                }
            } catch (const Error& e) {
                cand.error = e.what();
                if (single) throw;
            }
            sel.candidates.push_back(cand);
        }
    }
    if (!have) fail(ErrorCode::NumericDegeneracy, "no AR-HMM order candidate could be fitted");
    return sel;
}

double companion_radius(const ArHmm& model, int state) {
    const int p = model.p;
    if (p == 0) return 0.0;
    Mat a = Mat::Zero(p, p);
    for (int l = 0; l < p; ++l) a(l, 0) = model.phi(l, state);
    for (int l = 0; l + 1 < p; ++l) a(l, l + 1) = 1.0;
    Eigen::EigenSolver<Mat> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stationary(const ArHmm& model) {
    if (model.p == 0) return true;
    for (int i = 0; i < model.N; ++i)
        if (!(companion_radius(model, i) < 1.0 - 1e-9)) return false;
    return true;
}

std::vector<double> sample_arhmm(const ArHmm& model, std::size_t n, Rng& rng) {
    model.validate();
    if (!is_stationary(model)) fail(ErrorCode::Refused, "AR-HMM is not stationary; refusing to sample");
    require(n >= 1, ErrorCode::InvalidArgument, "sample_arhmm needs n >= 1");
    const int N = model.N, p = model.p;
    auto draw = [&](const Vec& probs) {
        double u = uniform01(rng), s = 0.0;
        for (int i = 0; i < probs.size(); ++i) {
            s += probs(i);
            if (u < s) return i;
        }
        return static_cast<int>(probs.size()) - 1;
    };
    int x = draw(model.pi0);
    std::vector<double> lags(static_cast<std::size_t>(p), 0.0);
    {
        double phisum = p > 0 ? model.phi.col(x).sum() : 0.0;
        double level = model.mu(x) + (model.residual == Residual::Exponential ? model.sigma(x) : 0.0);
        double fp = level / (1.0 - phisum);
        if (std::isfinite(fp)) std::fill(lags.begin(), lags.end(), fp);
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        double eps = model.residual == Residual::Normal ? standard_normal(rng) : standard_exponential(rng);
        double y = predict(model, x, lags) + model.sigma(x) * eps;
        out.push_back(y);
        if (p > 0) {
            for (int l = p - 1; l > 0; --l) lags[static_cast<std::size_t>(l)] = lags[static_cast<std::size_t>(l - 1)];
            lags[0] = y;
        }
        x = draw(model.P.row(x).transpose());
        (void)N;
    }
    return out;
}

}  // namespace dmapar
