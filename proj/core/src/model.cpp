#include "dmapar/model.hpp"

#include "dmapar/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace dmapar {

Vec stationary(const Mat& T) { return stationary_distribution(T); }

DMaparHmm build_t(const CarrierChain& carrier, const ArHmm& arhmm) {
    arhmm.validate();
    require(carrier.Q.rows() == carrier.size() && carrier.Q.cols() == carrier.size(),
            ErrorCode::InvalidArgument, "carrier Q has the wrong shape");
    const int N = arhmm.N, h = carrier.n_off, g = carrier.n_on;
    Mat id = Mat::Identity(N, N);
    DMaparHmm m;
    m.carrier = carrier;
    m.arhmm = arhmm;
    m.dt = carrier.dt;
    m.T = Mat::Zero((h + g) * N, (h + g) * N);
    const Mat& Q = carrier.Q;
    if (h > 0) {
        m.T.topLeftCorner(h * N, h * N) = kron(Q.topLeftCorner(h, h), id);
        m.T.topRightCorner(h * N, g * N) = kron(Q.topRightCorner(h, g), arhmm.P);
        m.T.bottomLeftCorner(g * N, h * N) = kron(Q.bottomLeftCorner(g, h), id);
    }
    m.T.bottomRightCorner(g * N, g * N) = kron(Q.bottomRightCorner(g, g), arhmm.P);
    require(row_sum_error(m.T) <= 1e-10, ErrorCode::InvalidArgument, "joint chain T is not row-stochastic");
    m.pi = stationary(m.T);
    return m;
}

BreveParams breve_params(const DMaparHmm& model, int z_prev, int z_next) {
    const int n = model.size();
    require(z_prev >= 0 && z_prev < n && z_next >= 0 && z_next < n, ErrorCode::InvalidArgument,
            "breve_params: state out of range");
    BreveParams b;
    b.phi.assign(static_cast<std::size_t>(model.arhmm.p), 0.0);
    if (!model.is_on(z_next)) return b;
    const int i = model.hidden(z_prev);
    b.mu = model.arhmm.mu(i);
    b.sigma = model.arhmm.sigma(i);
    for (int l = 0; l < model.arhmm.p; ++l) b.phi[static_cast<std::size_t>(l)] = model.arhmm.phi(l, i);
    return b;
}

PathSampler::PathSampler(const DMaparHmm& model) : n_(model.size()) {
    cdf_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) {
            s += model.T(i, j);
            cdf_[static_cast<std::size_t>(i * n_ + j)] = s;
        }
        cdf_[static_cast<std::size_t>(i * n_ + n_ - 1)] = std::numeric_limits<double>::infinity();
    }
    pi_cdf_.resize(static_cast<std::size_t>(n_));
    double s = 0.0;
    for (int j = 0; j < n_; ++j) {
        s += model.pi(j);
        pi_cdf_[static_cast<std::size_t>(j)] = s;
    }
    pi_cdf_.back() = std::numeric_limits<double>::infinity();
}

int PathSampler::initial(Rng& rng) const {
    double u = uniform01(rng);
    auto it = std::upper_bound(pi_cdf_.begin(), pi_cdf_.end(), u);
    return static_cast<int>(it - pi_cdf_.begin());
}

int PathSampler::next(int z, Rng& rng) const {
    double u = uniform01(rng);
    auto row = cdf_.begin() + static_cast<std::ptrdiff_t>(z) * n_;
    auto it = std::upper_bound(row, row + n_, u);
    return static_cast<int>(it - row);
}

namespace {

double residual_mean(Residual r) { return r == Residual::Normal ? 0.0 : 1.0; }

double fixed_point_level(const ArHmm& a, int i) {
    double phisum = a.p > 0 ? a.phi.col(i).sum() : 0.0;
    double v = (a.mu(i) + a.sigma(i) * residual_mean(a.residual)) / (1.0 - phisum);
    return std::isfinite(v) ? v : 0.0;
}

// Stationary E[y] of the AR-HMM amplitude sequence.
double arhmm_stationary_mean(const ArHmm& a) {
    const int N = a.N, p = a.p;
    Vec px = N == 1 ? Vec::Ones(1) : stationary_distribution(a.P);
    if (p == 0) {
        double m = 0.0;
        for (int k = 0; k < N; ++k) m += px(k) * (a.mu(k) + a.sigma(k) * residual_mean(a.residual));
        return m;
    }
    // Unknowns e_k = E[y_n 1{X_{n-1}=k}], h^l_k = E[y_{n-l} 1{X_{n-1}=k}].
    const int n = N * (p + 1);
    Mat A = Mat::Identity(n, n);
    Vec b = Vec::Zero(n);
    auto E = [&](int k) { return k; };
    auto Hl = [&](int l, int k) { return N * l + k; };  // l = 1..p
    for (int k = 0; k < N; ++k) {
        b(E(k)) = px(k) * (a.mu(k) + a.sigma(k) * residual_mean(a.residual));
        for (int l = 1; l <= p; ++l) A(E(k), Hl(l, k)) -= a.phi(l - 1, k);
        for (int j = 0; j < N; ++j) {
            A(Hl(1, k), E(j)) -= a.P(j, k);
            for (int l = 2; l <= p; ++l) A(Hl(l, k), Hl(l - 1, j)) -= a.P(j, k);
        }
    }
    Vec x = A.fullPivLu().solve(b);
    double m = 0.0;
    for (int k = 0; k < N; ++k) m += x(E(k));
    return m;
}

}  // namespace

double on_fraction(const DMaparHmm& model) {
    double s = 0.0;
    for (int z = model.n_off_states(); z < model.size(); ++z) s += model.pi(z);
    return s;
}

double mean_slot_bytes(const DMaparHmm& model) {
    return on_fraction(model) * arhmm_stationary_mean(model.arhmm);
}

GenerateResult generate(const DMaparHmm& model, std::size_t n_slots, Rng& rng) {
    const ArHmm& a = model.arhmm;
    if (!is_stationary(a)) fail(ErrorCode::Refused, "AR-HMM is not stationary; refusing to generate");
    require(n_slots >= 1, ErrorCode::InvalidArgument, "generate needs n_slots >= 1");
    PathSampler sampler(model);
    GenerateResult res;
    res.trace.dt = model.dt;
    res.trace.a.assign(n_slots, 0.0);
    int z = sampler.initial(rng);
    std::vector<double> lags(static_cast<std::size_t>(a.p), fixed_point_level(a, model.hidden(z)));
    for (std::size_t t = 0; t < n_slots; ++t) {
        int zn = sampler.next(z, rng);
        if (model.is_on(zn)) {
            int i = model.hidden(z);
            double eps = a.residual == Residual::Normal ? standard_normal(rng) : standard_exponential(rng);
            double y = a.mu(i) + a.sigma(i) * eps;
            for (int l = 0; l < a.p; ++l) y += a.phi(l, i) * lags[static_cast<std::size_t>(l)];
            if (a.p > 0) {
                for (int l = a.p - 1; l > 0; --l) lags[static_cast<std::size_t>(l)] = lags[static_cast<std::size_t>(l - 1)];
                lags[0] = y;
            }
            ++res.on_slots;
            if (y < 0.0) {
                ++res.clamped;
                y = 0.0;
            }
            res.trace.a[t] = y;
        }
        z = zn;
    }
    res.clamp_fraction = res.on_slots ? static_cast<double>(res.clamped) / static_cast<double>(res.on_slots) : 0.0;
    return res;
}

std::vector<std::string> baseline_names() {
    return {"poisson", "cpoisson", "mmoo", "mmp", "ar", "normal", "exponential", "map", "bmap"};
}

namespace {

DiscreteMap bernoulli_map(double q, double dt) {
    require(q >= 0.0 && q <= 1.0, ErrorCode::InvalidArgument, "per-slot probability outside [0,1]");
    DiscreteMap d;
    d.dt = dt;
    d.D0 = Mat::Constant(1, 1, 1.0 - q);
    d.D1 = Mat::Constant(1, 1, q);
    return d;
}

ArHmm constant_amplitude(double mu, double sigma, Residual r = Residual::Normal) {
    ArHmm a = make_arhmm(1, 0, r);
    a.mu(0) = mu;
    a.sigma(0) = sigma;
    return a;
}

}  // namespace

DMaparHmm from_baseline(const BaselineSpec& s) {
    require(s.dt > 0.0, ErrorCode::InvalidArgument, "baseline needs dt > 0");
    const std::string& n = s.name;
    if (n == "poisson" || n == "cpoisson") {
        require(s.lambda > 0.0, ErrorCode::InvalidArgument, "poisson baseline needs lambda > 0");
        CarrierChain c = build_q(CarrierMode::point(bernoulli_map(s.lambda * s.dt, s.dt)));
        ArHmm a = constant_amplitude(s.amp_mean, n == "poisson" ? 0.0 : s.amp_std);
        return build_t(c, a);
    }
    if (n == "mmoo") {
        require(s.alpha > 0.0 && s.beta > 0.0, ErrorCode::InvalidArgument, "mmoo needs alpha, beta > 0");
        CarrierChain c = build_q(CarrierMode::dual(bernoulli_map(s.alpha * s.dt, s.dt),
                                                   bernoulli_map(s.beta * s.dt, s.dt)));
        return build_t(c, constant_amplitude(s.peak, 0.0));
    }
    if (n == "mmp") {
        require(s.hidden.p == 0, ErrorCode::InvalidArgument, "mmp uses p = 0");
        return build_t(build_q(CarrierMode::always_on(s.dt)), s.hidden);
    }
    if (n == "ar") {
        ArHmm a = make_arhmm(1, static_cast<int>(s.phi.size()), Residual::Normal);
        a.mu(0) = s.mu;
        a.sigma(0) = s.sigma;
        for (std::size_t l = 0; l < s.phi.size(); ++l) a.phi(static_cast<Eigen::Index>(l), 0) = s.phi[l];
        return build_t(build_q(CarrierMode::always_on(s.dt)), a);
    }
    if (n == "normal") {
        return build_t(build_q(CarrierMode::always_on(s.dt)), constant_amplitude(s.mu, s.sigma));
    }
    if (n == "exponential") {
        require(s.mu > 0.0, ErrorCode::InvalidArgument, "exponential baseline needs a positive mean");
        return build_t(build_q(CarrierMode::always_on(s.dt)),
                       constant_amplitude(0.0, s.mu, Residual::Exponential));
    }
    if (n == "map" || n == "bmap") {
        require(s.map.has_value(), ErrorCode::InvalidArgument, n + " baseline needs a discrete MAP");
        DiscreteMap d = *s.map;
        d.dt = s.dt;
        CarrierChain c = build_q(CarrierMode::point(d));
        if (n == "map") return build_t(c, constant_amplitude(s.amp_mean, 0.0));
        const int K = static_cast<int>(s.batch_pmf.size());
        require(K >= 1, ErrorCode::InvalidArgument, "bmap needs a batch distribution");
        double tot = std::accumulate(s.batch_pmf.begin(), s.batch_pmf.end(), 0.0);
        require(tot > 0.0, ErrorCode::InvalidArgument, "bmap batch distribution is empty");
        ArHmm a = make_arhmm(K, 0, Residual::Normal);
        for (int k = 0; k < K; ++k) {
            a.mu(k) = (k + 1) * s.batch_unit;
            for (int j = 0; j < K; ++j) a.P(k, j) = s.batch_pmf[static_cast<std::size_t>(j)] / tot;
            a.pi0(k) = s.batch_pmf[static_cast<std::size_t>(k)] / tot;
        }
        return build_t(c, a);
    }
    fail(ErrorCode::UnknownBaseline, "unknown baseline '" + n + "'");
}

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v) {
    double m = mean_of(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

DMaparHmm fit_baseline(const std::string& name, const DiscretizedTrace& trace) {
    require(trace.dt > 0.0, ErrorCode::InvalidArgument, "trace needs dt > 0");
    require(trace.a.size() >= 2, ErrorCode::InsufficientData, "baseline fit needs at least 2 slots");
    std::span<const double> a(trace.a);
    BaselineSpec s;
    s.dt = trace.dt;
    if (name == "normal") {
        s.name = "normal";
        s.mu = mean_of(a);
        s.sigma = std_of(a);
        return from_baseline(s);
    }
    if (name == "exponential") {
        s.name = "exponential";
        s.mu = mean_of(a);
        return from_baseline(s);
    }
    DemodulatedTrace d = demodulate(trace);
    if (name == "cpoisson") {
        require(!d.y.empty(), ErrorCode::NoArrivals, "trace has no arrivals");
        s.name = "cpoisson";
        double q = static_cast<double>(d.y.size()) / static_cast<double>(a.size());
        s.lambda = q / trace.dt;
        s.amp_mean = mean_of(d.y);
        s.amp_std = std_of(d.y);
        return from_baseline(s);
    }
    if (name == "mmoo") {
        require(!d.tau_on.empty() && !d.tau_off.empty(), ErrorCode::NoArrivals,
                "mmoo needs both on and off runs");
        auto mean_u = [](const std::vector<std::uint64_t>& v) {
            double t = 0.0;
            for (auto x : v) t += static_cast<double>(x);
            return t / static_cast<double>(v.size());
        };
        s.name = "mmoo";
        s.alpha = 1.0 / (mean_u(d.tau_off) * trace.dt);
        s.beta = 1.0 / (mean_u(d.tau_on) * trace.dt);
        s.peak = mean_of(d.y);
        return from_baseline(s);
    }
    if (name == "ar1" || name == "ar") {
        // Ordinary least squares of a_t on a_{t-1}.
        const std::size_t n = a.size() - 1;
        double mx = 0.0, my = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            mx += a[t];
            my += a[t + 1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            sxy += (a[t] - mx) * (a[t + 1] - my);
            sxx += (a[t] - mx) * (a[t] - mx);
        }
        double phi = sxx > 0.0 ? sxy / sxx : 0.0;
        phi = std::clamp(phi, -0.999, 0.999);
        double c = my - phi * mx, rss = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            double e = a[t + 1] - c - phi * a[t];
            rss += e * e;
        }
        s.name = "ar";
        s.mu = c;
        s.sigma = std::sqrt(rss / static_cast<double>(n));
        s.phi = {phi};
        return from_baseline(s);
    }
    if (name == "mmp") {
        s.name = "mmp";
        s.hidden = fit_arhmm(a, 2, 0, Residual::Normal).model;
        return from_baseline(s);
    }
    fail(ErrorCode::UnknownBaseline, "unknown baseline '" + name + "'");
}

double residual_mgf(Residual r, double mu, double sigma, double s) {
    if (r == Residual::Normal) return std::exp(s * mu + 0.5 * s * s * sigma * sigma);
    double d = 1.0 - s * sigma;
    if (!(d > 0.0))
        fail(ErrorCode::DivergentMgf, "exponential residual MGF diverges (s*sigma >= 1)");
    return std::exp(s * mu) / d;
}

Vec exact_conditional_mgf(const DMaparHmm& model, double theta, int horizon,
                          std::span<const double> initial_lags, const ExactMgfOptions& opts) {
    const int S = model.size(), p = model.arhmm.p;
    require(horizon >= 0, ErrorCode::InvalidArgument, "horizon must be non-negative");
    require(static_cast<int>(initial_lags.size()) >= p, ErrorCode::InvalidArgument,
            "exact MGF needs p initial lags");
    double paths = std::pow(static_cast<double>(S), static_cast<double>(horizon));
    if (paths > opts.max_paths)
        fail(ErrorCode::TooLarge, "path enumeration exceeds guard (" + std::to_string(paths) + " paths)");
    const Residual res = model.arhmm.residual;

    Vec V = Vec::Zero(S);
    std::vector<int> z(static_cast<std::size_t>(horizon + 1));
    std::vector<double> phi(static_cast<std::size_t>(p + 2));
    std::vector<double> nphi(static_cast<std::size_t>(p + 2));

    auto leaf = [&]() {
        // Backward recursion from s = t; phi[i] holds varphi_i(s, t), i = 1..p+1.
        std::fill(phi.begin(), phi.end(), 1.0);
        double mgf = 1.0;
        for (int s = horizon; s >= 1; --s) {
            int zp = z[static_cast<std::size_t>(s - 1)], zn = z[static_cast<std::size_t>(s)];
            BreveParams b = breve_params(model, zp, zn);
            double phi1 = phi[1];
            mgf *= residual_mgf(res, b.mu, b.sigma, theta * phi1);
            if (model.is_on(zn)) {
                for (int i = 1; i <= p; ++i)
                    nphi[static_cast<std::size_t>(i)] = phi1 * b.phi[static_cast<std::size_t>(i - 1)] + phi[static_cast<std::size_t>(i + 1)];
                for (int i = 1; i <= p; ++i) phi[static_cast<std::size_t>(i)] = nphi[static_cast<std::size_t>(i)];
            }
        }
        double e = 0.0;
        for (int i = 1; i <= p; ++i) e += theta * (phi[static_cast<std::size_t>(i)] - 1.0) * initial_lags[static_cast<std::size_t>(i - 1)];
        return mgf * std::exp(e);
    };

    std::function<double(int, double)> dfs = [&](int depth, double prob) -> double {
        if (depth == horizon) return prob * leaf();
        double acc = 0.0;
        int cur = z[static_cast<std::size_t>(depth)];
        for (int j = 0; j < S; ++j) {
            double tij = model.T(cur, j);
            if (tij <= 0.0) continue;
            z[static_cast<std::size_t>(depth + 1)] = j;
            acc += dfs(depth + 1, prob * tij);
        }
        return acc;
    };

    for (int k = 0; k < S; ++k) {
        z[0] = k;
        V(k) = dfs(0, 1.0);
    }
    return V;
}

double exact_mgf(const DMaparHmm& model, double theta, int horizon, std::span<const double> initial_lags,
                 const Vec& z0_distribution, const ExactMgfOptions& opts) {
    require(z0_distribution.size() == model.size(), ErrorCode::InvalidArgument,
            "initial distribution has the wrong size");
    return z0_distribution.dot(exact_conditional_mgf(model, theta, horizon, initial_lags, opts));
}

DMaparHmm scale_amplitudes(const DMaparHmm& model, double k) {
    require(k > 0.0 && std::isfinite(k), ErrorCode::InvalidArgument, "amplitude scale must be positive");
    ArHmm a = model.arhmm;
    a.mu *= k;
    a.sigma *= k;
    return build_t(model.carrier, a);
}

}  // namespace dmapar
