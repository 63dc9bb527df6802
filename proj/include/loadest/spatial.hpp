#pragma once

#include "loadest/traffic_data.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace loadest::spatial {

using data::CellId;
using data::TrafficGrid;

// A candidate neighbor before loads are attached.
struct Candidate {
    std::size_t index = 0;  // position in TrafficGrid::cells()
    CellId id;
    double distance = 0.0;  // meters, center to center
};

struct Neighbor {
    CellId id;
    double distance = 0.0;
    double load = 0.0;
};

struct NeighborSet {
    CellId target;
    std::vector<Neighbor> neighbors;
    double d_max = 0.0;
};

struct WeightingConfig {
    double exponent = 1.0;  // n > 0
};

// The `count` cells closest to target, nearest first, ties by ascending id.
// Cells in `excluded` (e.g. other sleeping cells) are never candidates.
std::vector<Candidate> nearest_candidates(const TrafficGrid& grid, CellId target, std::size_t count,
                                          std::span<const CellId> excluded = {});

// `count` distinct cells drawn uniformly without replacement, in draw order.
std::vector<Candidate> random_candidates(const TrafficGrid& grid, CellId target, std::size_t count,
                                         std::uint64_t seed, std::span<const CellId> excluded = {});

// Attaches each candidate's load at `slot`.
NeighborSet make_neighbor_set(const TrafficGrid& grid, CellId target, std::span<const Candidate> candidates,
                              std::size_t slot);

NeighborSet select_nearest(const TrafficGrid& grid, CellId target, std::size_t count, std::size_t slot = 0);
NeighborSet select_random(const TrafficGrid& grid, CellId target, std::size_t count, std::uint64_t seed,
                          std::size_t slot = 0);

double estimate_unweighted_mean(const NeighborSet& ns);

// d_max / d^n
double weight_factor(double d, double d_max, const WeightingConfig& cfg);

// Sum(load * w) / Sum(w) with w = d_max / d^n, evaluated as Sum(load * r^n) / Sum(r^n)
// with r = d_min / d.
double estimate_distance_weighted(const NeighborSet& ns, const WeightingConfig& cfg);

double estimate_random_mean(const TrafficGrid& grid, CellId target, std::size_t count, std::uint64_t seed,
                            std::size_t slot = 0);
double estimate_random_weighted(const TrafficGrid& grid, CellId target, std::size_t count,
                                const WeightingConfig& cfg, std::uint64_t seed, std::size_t slot = 0);

} // namespace loadest::spatial
