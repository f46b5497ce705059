#include "dmapar/map.hpp"

#include "dmapar/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace dmapar {

void ContinuousMap::validate(double tol) const {
    const Eigen::Index m = C0.rows();
    require(m >= 1 && C0.cols() == m && C1.rows() == m && C1.cols() == m,
            ErrorCode::InvalidArgument, "MAP matrices must be square and of equal size");
    require(C0.allFinite() && C1.allFinite(), ErrorCode::InvalidArgument, "MAP rates must be finite");
    double scale = std::max(1.0, C0.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) {
        require(C0(i, i) < 0.0, ErrorCode::InvalidArgument,
                "C0 diagonal must be negative (state " + std::to_string(i) + ")");
        for (Eigen::Index j = 0; j < m; ++j) {
            require(C1(i, j) >= 0.0, ErrorCode::InvalidArgument, "C1 entries must be non-negative");
            if (i != j)
                require(C0(i, j) >= 0.0, ErrorCode::InvalidArgument,
                        "C0 off-diagonal entries must be non-negative");
        }
        double rs = C0.row(i).sum() + C1.row(i).sum();
        require(std::abs(rs) <= tol * scale, ErrorCode::InvalidArgument,
                "rows of C0 + C1 must sum to zero (state " + std::to_string(i) + ")");
    }
}

void DiscreteMap::validate(double tol) const {
    const Eigen::Index m = D0.rows();
    require(m >= 1 && D0.cols() == m && D1.rows() == m && D1.cols() == m,
            ErrorCode::InvalidArgument, "MAP matrices must be square and of equal size");
    require(dt > 0.0, ErrorCode::InvalidArgument, "discrete MAP needs dt > 0");
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            require(D0(i, j) >= 0.0 && D0(i, j) <= 1.0 && D1(i, j) >= 0.0 && D1(i, j) <= 1.0,
                    ErrorCode::InvalidArgument, "discrete MAP entries must lie in [0,1]");
        }
        double rs = D0.row(i).sum() + D1.row(i).sum();
        require(std::abs(rs - 1.0) <= tol, ErrorCode::InvalidArgument,
                "rows of D0 + D1 must sum to one (state " + std::to_string(i) + ")");
    }
}

DiscreteMap discretize_map(const ContinuousMap& cmap, double dt) {
    cmap.validate();
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidDt, "dt must be positive");
    const int m = cmap.m();
    for (int i = 0; i < m; ++i) {
        double nu = -cmap.C0(i, i);
        if (!(nu * dt < 1.0))
            fail(ErrorCode::InvalidDt, "dt >= 1/nu_" + std::to_string(i) + " (nu=" +
                                           std::to_string(nu) + ")");
    }
    DiscreteMap d;
    d.dt = dt;
    d.D0 = cmap.C0 * dt;
    d.D1 = cmap.C1 * dt;
    for (int i = 0; i < m; ++i) {
        // Diagonal as the complement keeps the row sums at one to rounding.
        double off = 0.0;
        for (int j = 0; j < m; ++j) {
            if (j != i) off += d.D0(i, j);
            off += d.D1(i, j);
        }
        d.D0(i, i) = 1.0 - off;
    }
    return d;
}

namespace {

Vec stationary_of(const Mat& p) { return stationary_distribution(p); }

struct IntervalCache {
    Mat E;   // exp(C0 x)
    Mat K;   // m^2 x m^2 integral operator
};

// Van Loan block exponential for the convolution integral
// X = int_0^x e^{C0(x-u)} M e^{C0 u} du, vec(X) = K vec(M).
IntervalCache interval_cache(const Mat& c0, double x) {
    const Eigen::Index m = c0.rows();
    const Eigen::Index mm = m * m;
    Mat id = Mat::Identity(m, m);
    Mat g = Mat::Zero(2 * mm, 2 * mm);
    g.topLeftCorner(mm, mm) = kron(id, c0);
    g.topRightCorner(mm, mm) = Mat::Identity(mm, mm);
    g.bottomRightCorner(mm, mm) = kron(c0.transpose(), id);
    Mat ex = (g * x).exp();
    IntervalCache c;
    c.E = ex.topLeftCorner(m, m);
    c.K = ex.topRightCorner(mm, mm);
    return c;
}

struct EmRun {
    ContinuousMap map;
    Vec pi0;
    double ll = -std::numeric_limits<double>::infinity();
    std::vector<double> history;
    int iterations = 0;
};

EmRun run_em(const std::vector<double>& uniq, const std::vector<std::size_t>& idx,
             ContinuousMap cm, Vec pi0, const MapFitOptions& opts) {
    const int m = cm.m();
    const std::size_t n = idx.size();
    const std::size_t nu = uniq.size();
    EmRun run;
    std::vector<IntervalCache> cache(nu);
    Mat alpha(static_cast<Eigen::Index>(n + 1), m);
    Mat beta(static_cast<Eigen::Index>(n + 1), m);
    std::vector<double> scale(n);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        for (std::size_t u = 0; u < nu; ++u) cache[u] = interval_cache(cm.C0, uniq[u]);

        // Forward pass with per-step scaling.
        alpha.row(0) = pi0.transpose();
        double ll = 0.0;
        bool degenerate = false;
        for (std::size_t k = 0; k < n; ++k) {
            RowVec v = alpha.row(static_cast<Eigen::Index>(k)) * cache[idx[k]].E * cm.C1;
            double c = v.sum();
            if (!(c > 0.0) || !std::isfinite(c)) {
                degenerate = true;
                break;
            }
            scale[k] = c;
            ll += std::log(c);
            alpha.row(static_cast<Eigen::Index>(k + 1)) = v / c;
        }
        if (degenerate) break;
        run.history.push_back(ll);
        run.map = cm;
        run.pi0 = pi0;
        run.ll = ll;
        run.iterations = iter + 1;
        if (iter > 0 && std::abs(ll - prev_ll) <= opts.tol * std::max(1.0, std::abs(prev_ll))) break;
        prev_ll = ll;

        beta.row(static_cast<Eigen::Index>(n)).setOnes();
        for (std::size_t k = n; k-- > 0;) {
            Vec w = cache[idx[k]].E * (cm.C1 * beta.row(static_cast<Eigen::Index>(k + 1)).transpose());
            beta.row(static_cast<Eigen::Index>(k)) = (w / scale[k]).transpose();
        }

        // E-step.
        Mat n1 = Mat::Zero(m, m);
        std::vector<Vec> acc(nu, Vec::Zero(m * m));
        for (std::size_t k = 0; k < n; ++k) {
            const auto& cc = cache[idx[k]];
            RowVec a = alpha.row(static_cast<Eigen::Index>(k));
            Vec b = beta.row(static_cast<Eigen::Index>(k + 1)).transpose();
            RowVec ae = a * cc.E;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) n1(i, j) += ae(i) * cm.C1(i, j) * b(j) / scale[k];
            Vec w = cm.C1 * b;
            // vec(w a), column-major.
            Mat outer = w * a;
            acc[idx[k]] += Eigen::Map<const Vec>(outer.data(), m * m) / scale[k];
        }
        Vec xsum = Vec::Zero(m * m);
        for (std::size_t u = 0; u < nu; ++u) xsum += cache[u].K * acc[u];
        Eigen::Map<const Mat> x(xsum.data(), m, m);
        Mat y = x.transpose();

        // M-step.
        ContinuousMap next = cm;
        for (int i = 0; i < m; ++i) {
            double tau = y(i, i);
            if (!(tau > 1e-300)) continue;
            double out = 0.0;
            for (int j = 0; j < m; ++j) {
                next.C1(i, j) = n1(i, j) / tau;
                out += next.C1(i, j);
                if (j != i) {
                    next.C0(i, j) = std::max(0.0, cm.C0(i, j) * y(i, j)) / tau;
                    out += next.C0(i, j);
                }
            }
            next.C0(i, i) = -out;
        }
        Vec p0 = (alpha.row(0).transpose().array() * beta.row(0).transpose().array()).matrix();
        double s = p0.sum();
        if (s > 0.0) pi0 = p0 / s;
        bool ok = next.C0.allFinite() && next.C1.allFinite();
        for (int i = 0; ok && i < m; ++i) ok = next.C0(i, i) < 0.0;
        if (!ok) break;
        cm = next;
    }
    return run;
}

}  // namespace

double map_log_likelihood(const ContinuousMap& cmap, const Vec& pi0, std::span<const double> iats) {
    RowVec a = pi0.transpose();
    double ll = 0.0;
    for (double x : iats) {
        RowVec v = a * (cmap.C0 * x).exp() * cmap.C1;
        double c = v.sum();
        if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += std::log(c);
        a = v / c;
    }
    return ll;
}

MapFitResult fit_map_em(std::span<const double> iats, int m, const MapFitOptions& opts) {
    require(m >= 1, ErrorCode::InvalidArgument, "MAP order must be at least 1");
    const std::size_t need = static_cast<std::size_t>(10 * (2 * m * m - m));
    if (iats.size() < need)
        fail(ErrorCode::InsufficientData, "fit_map needs at least " + std::to_string(need) +
                                              " inter-arrival samples, got " +
                                              std::to_string(iats.size()));
    for (double x : iats)
        require(x > 0.0 && std::isfinite(x), ErrorCode::InvalidArgument,
                "inter-arrival times must be positive");
    require(opts.restarts >= 1 && opts.max_iter >= 1, ErrorCode::InvalidArgument,
            "fit_map needs restarts >= 1 and max_iter >= 1");

    std::map<double, std::size_t> ids;
    std::vector<double> uniq;
    std::vector<std::size_t> idx(iats.size());
    for (std::size_t k = 0; k < iats.size(); ++k) {
        auto [it, fresh] = ids.emplace(iats[k], uniq.size());
        if (fresh) uniq.push_back(iats[k]);
        idx[k] = it->second;
    }
    double mean = std::accumulate(iats.begin(), iats.end(), 0.0) / static_cast<double>(iats.size());

    EmRun best;
    int best_r = 0;
    for (int r = 0; r < opts.restarts; ++r) {
        Rng rng = make_rng(opts.seed, static_cast<std::uint64_t>(r));
        ContinuousMap cm;
        cm.C0 = Mat::Zero(m, m);
        cm.C1 = Mat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            double out = 0.0;
            for (int j = 0; j < m; ++j) {
                cm.C1(i, j) = uniform01(rng) * 2.0 / mean;
                out += cm.C1(i, j);
                if (j != i) {
                    cm.C0(i, j) = uniform01(rng) * 2.0 / mean;
                    out += cm.C0(i, j);
                }
            }
            cm.C0(i, i) = -out;
        }
        Vec pi0 = Vec::Constant(m, 1.0 / m);
        EmRun run = run_em(uniq, idx, cm, pi0, opts);
        if (run.iterations > 0 && run.ll > best.ll) {
            best = std::move(run);
            best_r = r;
        }
    }
    if (best.iterations == 0) fail(ErrorCode::NumericDegeneracy, "MAP EM failed on every restart");
    MapFitResult res;
    res.map = best.map;
    res.pi0 = best.pi0;
    res.log_likelihood = best.ll;
    res.history = std::move(best.history);
    res.iterations = best.iterations;
    res.restart_index = best_r;
    return res;
}

ContinuousMap fit_map(std::span<const double> iats, int m, const MapFitOptions& opts) {
    return fit_map_em(iats, m, opts).map;
}

Vec map_embedded_stationary(const ContinuousMap& cmap) {
    const int m = cmap.m();
    Mat pe = (-cmap.C0).partialPivLu().solve(cmap.C1);
    (void)m;
    return stationary_of(pe);
}

Vec map_embedded_stationary(const DiscreteMap& dmap) {
    const int m = dmap.m();
    Mat pe = (Mat::Identity(m, m) - dmap.D0).partialPivLu().solve(dmap.D1);
    return stationary_of(pe);
}

double map_iat_moment(const ContinuousMap& cmap, int k) {
    require(k >= 1, ErrorCode::InvalidArgument, "moment order must be positive");
    Vec pe = map_embedded_stationary(cmap);
    Mat minv = (-cmap.C0).inverse();
    Vec v = Vec::Ones(cmap.m());
    double fact = 1.0;
    for (int i = 1; i <= k; ++i) {
        v = minv * v;
        fact *= i;
    }
    return fact * pe.dot(v);
}

double map_iat_lag1_corr(const ContinuousMap& cmap) {
    Vec pe = map_embedded_stationary(cmap);
    Mat minv = (-cmap.C0).inverse();
    Vec one = Vec::Ones(cmap.m());
    double m1 = pe.dot(minv * one);
    double m2 = 2.0 * pe.dot(minv * (minv * one));
    double cross = pe.dot(minv * (minv * (cmap.C1 * (minv * one))));
    double var = m2 - m1 * m1;
    if (!(var > 0.0)) return 0.0;
    return (cross - m1 * m1) / var;
}

std::vector<std::uint64_t> sample_map(const DiscreteMap& dmap, std::size_t n_events, Rng& rng) {
    dmap.validate(1e-9);
    require(n_events >= 1, ErrorCode::InvalidArgument, "sample_map needs n_events >= 1");
    if (!(dmap.D1.maxCoeff() > 0.0)) fail(ErrorCode::NoArrivals, "D1 is identically zero");
    const int m = dmap.m();
    // Row-wise cumulative distribution over [D0 | D1].
    Mat cdf(m, 2 * m);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < 2 * m; ++j) {
            s += j < m ? dmap.D0(i, j) : dmap.D1(i, j - m);
            cdf(i, j) = s;
        }
        cdf(i, 2 * m - 1) = std::numeric_limits<double>::infinity();
    }
    Vec pe = map_embedded_stationary(dmap);
    int state = 0;
    {
        double u = uniform01(rng), s = 0.0;
        for (int i = 0; i < m; ++i) {
            s += pe(i);
            state = i;
            if (u < s) break;
        }
    }
    std::vector<std::uint64_t> out;
    out.reserve(n_events);
    std::uint64_t count = 0;
    const std::uint64_t guard = std::uint64_t(1) << 40;
    while (out.size() < n_events) {
        double u = uniform01(rng);
        int j = 0;
        while (cdf(state, j) <= u) ++j;
        ++count;
        if (j >= m) {
            out.push_back(count);
            count = 0;
            state = j - m;
        } else {
            state = j;
            if (count > guard) fail(ErrorCode::NoArrivals, "no arrival reachable from state");
        }
    }
    return out;
}

}  // namespace dmapar

namespace dmapar {

DiscreteMapFit refine_discrete_map(std::span<const std::uint64_t> counts, const DiscreteMap& init, const Vec& pi0,
                                   int max_iter, double tol) {
    init.validate(1e-9);
    const int m = init.m();
    require(pi0.size() == m, ErrorCode::InvalidArgument, "pi0 size does not match the MAP");
    require(!counts.empty(), ErrorCode::InsufficientData, "no counts to fit");
    std::size_t slots = 0;
    for (auto k : counts) {
        require(k >= 1, ErrorCode::InvalidArgument, "slot counts must be at least 1");
        slots += k;
    }

    DiscreteMapFit out;
    out.map = init;
    out.pi0 = pi0 / pi0.sum();
    const auto um = static_cast<std::size_t>(m);
    std::vector<double> alpha(um * slots);  // scaled forward vector before each slot
    std::vector<double> scale(slots);
    std::vector<double> a(um), next(um), b(um), n0(um * um), n1(um * um);
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        const Mat& d0 = out.map.D0;
        const Mat& d1 = out.map.D1;
        for (int i = 0; i < m; ++i) a[i] = out.pi0(i);
        double ll = 0.0;
        std::size_t t = 0;
        for (auto k : counts) {
            for (std::uint64_t l = 0; l < k; ++l, ++t) {
                const Mat& d = l + 1 < k ? d0 : d1;
                std::copy(a.begin(), a.end(), alpha.begin() + static_cast<std::ptrdiff_t>(t * um));
                double c = 0.0;
                for (int j = 0; j < m; ++j) {
                    double x = 0.0;
                    for (int i = 0; i < m; ++i) x += a[i] * d(i, j);
                    next[j] = x;
                    c += x;
                }
                if (!(c > 0.0)) fail(ErrorCode::Underflow, "zero likelihood in discrete MAP refinement");
                scale[t] = c;
                for (int j = 0; j < m; ++j) a[j] = next[j] / c;
                ll += std::log(c);
            }
        }
        if (it > 0 && ll - prev <= tol * std::abs(ll)) {
            out.log_likelihood = std::max(ll, prev);
            break;
        }
        out.log_likelihood = ll;
        prev = ll;
        out.iterations = it + 1;

        std::fill(n0.begin(), n0.end(), 0.0);
        std::fill(n1.begin(), n1.end(), 0.0);
        std::fill(b.begin(), b.end(), 1.0);
        t = slots;
        for (auto kit = counts.rbegin(); kit != counts.rend(); ++kit) {
            std::uint64_t k = *kit;
            for (std::uint64_t l = k; l-- > 0;) {
                --t;
                const Mat& d = l + 1 < k ? d0 : d1;
                double* n = l + 1 < k ? n0.data() : n1.data();
                const double* al = alpha.data() + t * um;
                double inv = 1.0 / scale[t];
                for (int i = 0; i < m; ++i) {
                    double x = 0.0;
                    for (int j = 0; j < m; ++j) {
                        double w = d(i, j) * b[j];
                        n[i * m + j] += al[i] * w * inv;
                        x += w;
                    }
                    next[i] = x * inv;
                }
                std::swap(b, next);
            }
        }
        Vec post(m);
        for (int i = 0; i < m; ++i) post(i) = out.pi0(i) * b[i];
        if (post.sum() > 0.0) out.pi0 = post / post.sum();
        for (int i = 0; i < m; ++i) {
            double row = 0.0;
            for (int j = 0; j < m; ++j) row += n0[i * m + j] + n1[i * m + j];
            if (!(row > 0.0)) continue;
            for (int j = 0; j < m; ++j) {
                out.map.D0(i, j) = n0[i * m + j] / row;
                out.map.D1(i, j) = n1[i * m + j] / row;
            }
        }
    }
    return out;
}

}  // namespace dmapar
