#include "dmapar/linalg.hpp"

#include "dmapar/error.hpp"

#include <cmath>

namespace dmapar {

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double row_sum_error(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

PowerResult perron_power(const Mat& m, double tol, int max_iter) {
    const Eigen::Index n = m.rows();
    PowerResult res;
    double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        res.right = Vec::Ones(n);
        res.converged = true;
        return res;
    }
    // (M + sI) has the same Perron vector; the shift removes other
    // eigenvalues of modulus r.
    const double shift = 0.5 * scale;
    Mat a = m / scale;
    a.diagonal().array() += shift / scale;
    Vec x = Vec::Ones(n);
    double lam = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Vec y = a * x;
        double ymax = y.cwiseAbs().maxCoeff();
        if (ymax == 0.0) {
            res.value = 0.0;
            res.right = x;
            res.iterations = it;
            res.converged = true;
            return res;
        }
        y /= ymax;
        double diff = (y - x).cwiseAbs().maxCoeff();
        x = y;
        lam = ymax;
        res.iterations = it;
        if (diff < tol) {
            res.converged = true;
            break;
        }
    }
    // Rayleigh-type estimate from the max-normalized vector.
    Vec ax = a * x;
    Eigen::Index k;
    x.cwiseAbs().maxCoeff(&k);
    lam = ax(k) / x(k);
    res.value = (lam - shift / scale) * scale;
    res.right = x;
    return res;
}

Vec stationary_distribution(const Mat& t, double tol) {
    const Eigen::Index n = t.rows();
    require(n > 0 && t.cols() == n, ErrorCode::InvalidArgument, "stationary: matrix must be square");
    if (n == 1) return Vec::Ones(1);
    Mat g = t.transpose() - Mat::Identity(n, n);
    Eigen::FullPivLU<Mat> lu(g);
    lu.setThreshold(1e-10);
    if (lu.rank() < n - 1)
        fail(ErrorCode::NonErgodic, "chain has no unique stationary distribution");
    Mat a(n + 1, n);
    a.topRows(n) = g;
    a.row(n).setOnes();
    Vec rhs = Vec::Zero(n + 1);
    rhs(n) = 1.0;
    Vec pi = a.colPivHouseholderQr().solve(rhs);
    auto residual = [&](const Vec& x) {
        return (t.transpose() * x - x).cwiseAbs().maxCoeff();
    };
    bool ok = pi.allFinite() && pi.minCoeff() > -1e-12 && residual(pi) <= 1e-10;
    if (!ok) {
        Vec x = Vec::Constant(n, 1.0 / static_cast<double>(n));
        // Lazy chain (T + I)/2 is aperiodic with the same stationary vector.
        for (int it = 0; it < 1000000; ++it) {
            Vec y = 0.5 * (t.transpose() * x + x);
            y /= y.sum();
            double d = (y - x).cwiseAbs().maxCoeff();
            x = y;
            if (d < tol) break;
        }
        pi = x;
    }
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return pi;
}

std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vec from_std(const std::vector<double>& v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

}  // namespace dmapar
