#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dmapar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

Mat kron(const Mat& a, const Mat& b);

// Largest |row sum - 1| over rows.
double row_sum_error(const Mat& m);

struct PowerResult {
    double value = 0.0;
    Vec right;      // normalized to unit max-norm, non-negative for non-negative input
    int iterations = 0;
    bool converged = false;
};

// Perron root of a non-negative matrix by power iteration with a small
// diagonal shift to break periodicity.
PowerResult perron_power(const Mat& m, double tol = 1e-14, int max_iter = 200000);

// Unique stationary row vector of a row-stochastic matrix: least squares on
// [T^T - I; 1^T], power iteration as fallback. Throws NonErgodic when the
// stationary vector is not unique.
Vec stationary_distribution(const Mat& t, double tol = 1e-12);

std::vector<double> to_std(const Vec& v);
Vec from_std(const std::vector<double>& v);

}  // namespace dmapar
