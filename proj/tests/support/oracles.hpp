#pragma once

// Reference computations used by the tests. None of these call into the
// library's numerical code; they work from model parameters directly.

#include "dmapar/model.hpp"

#include <cstdint>
#include <vector>

namespace oracle {

using dmapar::Mat;
using dmapar::Vec;

// Continuous MAP(2) rates in the notation of the worked example:
// nu_ij is the rate from state i; j in {0,1} is a hidden move to the other
// state, j in {2,3} an arrival landing in state j-2.
struct Map2Rates {
    double n01 = 0.0, n02 = 0.0, n03 = 0.0;
    double n10 = 0.0, n12 = 0.0, n13 = 0.0;
    double nu0() const { return n01 + n02 + n03; }
    double nu1() const { return n10 + n12 + n13; }
};

dmapar::DiscreteMap discrete_map2(const Map2Rates& r, double dt);

// The 8x8 carrier matrix written out entry by entry, states ordered
// (o, s_on, s_off) lexicographically.
Mat example_q(const Map2Rates& off, const Map2Rates& on, double dt);

// E[exp(theta A(0,t))] for a p = 0 model started from `start`, by the forward
// recursion over slots with one Gaussian or exponential amplitude per on slot.
double mgf_p0(const dmapar::DMaparHmm& model, double theta, int t, const Vec& start);

// Same, conditional on each initial state.
Vec conditional_mgf_p0(const dmapar::DMaparHmm& model, double theta, int t);

// Plain power iteration for the Perron root of a positive matrix.
double perron_root(const Mat& m, double tol = 1e-15, int max_iter = 1000000);

// Fractional Gaussian noise by circulant embedding (FFTW).
std::vector<double> fgn(std::size_t n, double hurst, std::uint64_t seed);

struct Ar1Ols {
    double mu = 0.0;
    double phi = 0.0;
    double sigma = 0.0;
};
Ar1Ols ols_ar1(const std::vector<double>& y);

double mean(const std::vector<double>& x);
double stddev(const std::vector<double>& x);  // population

}  // namespace oracle
