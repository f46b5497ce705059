#pragma once

#include <cstdint>
#include <random>

namespace dmapar {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to derive independent streams from one seed.
std::uint64_t splitmix64(std::uint64_t x);

// Generator for stream `stream` of run seed `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

double uniform01(Rng& rng);  // in (0,1)
double standard_normal(Rng& rng);
double standard_exponential(Rng& rng);

}  // namespace dmapar
