#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace loadest {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Seed for a sub-stream identified by a path of indices, e.g. (seed, iteration, cell).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

Rng make_rng(std::uint64_t seed);

// Distributions are implemented here; streams are identical across standard libraries.

// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

double uniform(Rng& rng, double lo, double hi);

// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

// Standard normal via Box-Muller (one variate per call, the pair's twin is discarded).
double standard_normal(Rng& rng);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

} // namespace loadest
