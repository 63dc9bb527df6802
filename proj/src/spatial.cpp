#include "loadest/spatial.hpp"

#include "loadest/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loadest::spatial {

namespace {

std::size_t require_target(const TrafficGrid& grid, CellId target) {
    const auto idx = grid.index_of(target);
    if (!idx) {
        throw std::out_of_range("unknown target cell " + std::to_string(target.value));
    }
    return *idx;
}

std::vector<Candidate> candidate_pool(const TrafficGrid& grid, CellId target, std::span<const CellId> excluded) {
    const auto& origin = grid[require_target(grid, target)].position;
    std::vector<Candidate> pool;
    pool.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& cell = grid[i];
        if (cell.id == target || std::find(excluded.begin(), excluded.end(), cell.id) != excluded.end()) {
            continue;
        }
        pool.push_back({i, cell.id, data::distance(origin, cell.position)});
    }
    return pool;
}

void check_count(std::size_t count, std::size_t available) {
    if (count == 0) {
        throw std::invalid_argument("neighbor count must be at least 1");
    }
    if (count > available) {
        throw std::invalid_argument("neighbor count " + std::to_string(count) + " exceeds the " +
                                    std::to_string(available) + " available cells");
    }
}

void check_non_empty(const NeighborSet& ns) {
    if (ns.neighbors.empty()) {
        throw std::invalid_argument("empty neighbor set");
    }
}

} // namespace

std::vector<Candidate> nearest_candidates(const TrafficGrid& grid, CellId target, std::size_t count,
                                          std::span<const CellId> excluded) {
    auto pool = candidate_pool(grid, target, excluded);
    check_count(count, pool.size());
    const auto closer = [](const Candidate& a, const Candidate& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    };
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end(), closer);
    pool.resize(count);
    return pool;
}

std::vector<Candidate> random_candidates(const TrafficGrid& grid, CellId target, std::size_t count,
                                         std::uint64_t seed, std::span<const CellId> excluded) {
    auto pool = candidate_pool(grid, target, excluded);
    check_count(count, pool.size());
    auto rng = make_rng(seed);
    // Partial Fisher-Yates: the first `count` slots become a uniform draw without replacement.
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

NeighborSet make_neighbor_set(const TrafficGrid& grid, CellId target, std::span<const Candidate> candidates,
                              std::size_t slot) {
    if (slot >= grid.series_length()) {
        throw std::out_of_range("slot " + std::to_string(slot) + " beyond series length");
    }
    NeighborSet ns{target, {}, 0.0};
    ns.neighbors.reserve(candidates.size());
    for (const auto& c : candidates) {
        ns.neighbors.push_back({c.id, c.distance, grid.load(c.index, slot)});
        ns.d_max = std::max(ns.d_max, c.distance);
    }
    return ns;
}

NeighborSet select_nearest(const TrafficGrid& grid, CellId target, std::size_t count, std::size_t slot) {
    const auto picked = nearest_candidates(grid, target, count);
    return make_neighbor_set(grid, target, picked, slot);
}

NeighborSet select_random(const TrafficGrid& grid, CellId target, std::size_t count, std::uint64_t seed,
                          std::size_t slot) {
    const auto picked = random_candidates(grid, target, count, seed);
    return make_neighbor_set(grid, target, picked, slot);
}

double estimate_unweighted_mean(const NeighborSet& ns) {
    check_non_empty(ns);
    double sum = 0.0;
    for (const auto& nb : ns.neighbors) {
        sum += nb.load;
    }
    return sum / static_cast<double>(ns.neighbors.size());
}

double weight_factor(double d, double d_max, const WeightingConfig& cfg) {
    if (!(d > 0.0)) {
        throw std::invalid_argument("neighbor distance must be positive");
    }
    if (!(cfg.exponent > 0.0)) {
        throw std::invalid_argument("weighting exponent must be positive");
    }
    return d_max / std::pow(d, cfg.exponent);
}

double estimate_distance_weighted(const NeighborSet& ns, const WeightingConfig& cfg) {
    check_non_empty(ns);
    if (!(cfg.exponent > 0.0)) {
        throw std::invalid_argument("weighting exponent must be positive");
    }
    double d_min = ns.neighbors.front().distance;
    for (const auto& nb : ns.neighbors) {
        if (!(nb.distance > 0.0)) {
            throw std::invalid_argument("neighbor distance must be positive");
        }
        d_min = std::min(d_min, nb.distance);
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& nb : ns.neighbors) {
        const double w = std::pow(d_min / nb.distance, cfg.exponent);
        num += nb.load * w;
        den += w;
    }
    return num / den;
}

double estimate_random_mean(const TrafficGrid& grid, CellId target, std::size_t count, std::uint64_t seed,
                            std::size_t slot) {
    return estimate_unweighted_mean(select_random(grid, target, count, seed, slot));
}

double estimate_random_weighted(const TrafficGrid& grid, CellId target, std::size_t count,
                                const WeightingConfig& cfg, std::uint64_t seed, std::size_t slot) {
    return estimate_distance_weighted(select_random(grid, target, count, seed, slot), cfg);
}

} // namespace loadest::spatial
