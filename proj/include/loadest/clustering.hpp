#pragma once

#include "loadest/traffic_data.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace loadest::cluster {

using data::CellId;
using data::TrafficGrid;

struct FeaturePoint {
    CellId id;
    std::vector<double> features;
};

struct KMeansOptions {
    std::size_t max_iter = 300;
    double tol = 1e-10;  // stop once no centroid moves farther than this
};

struct ClusterModel {
    std::size_t clusters = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<CellId> ids;              // aligned with the input points
    std::vector<std::size_t> assignment;  // cluster index per point
    double sse = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    std::size_t cluster_of(CellId id) const;
    std::vector<std::size_t> cluster_sizes() const;
};

// Lloyd's algorithm from a seeded k-means++ start. Ties in the nearest-centroid
// search go to the lower cluster index. A cluster left empty takes the point
// farthest from its own centroid among clusters with more than one member.
ClusterModel kmeans(std::span<const FeaturePoint> points, std::size_t clusters, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Lowest-SSE model over `restarts` seeded runs; the earliest restart wins ties.
ClusterModel kmeans_best_of(std::span<const FeaturePoint> points, std::size_t clusters, std::uint64_t seed,
                            std::size_t restarts, const KMeansOptions& options = {});

// Sum over clusters of squared Euclidean distances from members to the model's centroid.
double sse(std::span<const FeaturePoint> points, const ClusterModel& model);

struct ElbowResult {
    std::size_t clusters = 1;
    std::vector<std::size_t> candidates;
    std::vector<double> sse_curve;
};

// Index of the knee of a non-increasing curve: the point farthest from the chord
// joining its endpoints after scaling both axes to [0, 1]. A flat curve yields 0.
std::size_t knee_index(std::span<const double> curve);

ElbowResult elbow_select_g(std::span<const FeaturePoint> points, std::size_t g_min, std::size_t g_max,
                           std::uint64_t seed, std::size_t restarts = 5, const KMeansOptions& options = {});

enum class Bootstrap {
    GlobalActiveMean,  // hidden profile entries start at the active cells' mean for that slot
};

struct MlcConfig {
    std::size_t layers = 7;
    std::optional<std::size_t> clusters = 3;  // nullopt selects G with the elbow method
    std::size_t elbow_max = 8;
    Bootstrap bootstrap = Bootstrap::GlobalActiveMean;
    // Slots a sleeping cell has been dark, ending at the evaluation slot; these
    // profile entries are unknown and get estimated. The rest of its day profile
    // is history recorded while it was active.
    std::size_t sleep_duration = 1;
    std::size_t restarts = 1;
    KMeansOptions kmeans;
    std::uint64_t seed = 0;
};

struct MlcLayer {
    std::vector<std::size_t> cluster;              // per sleeping cell
    std::vector<std::vector<double>> estimates;    // per sleeping cell, per hidden slot
};

struct MlcTrace {
    std::size_t clusters = 0;
    std::vector<CellId> sleeping;
    std::vector<std::size_t> hidden_slots;
    std::vector<MlcLayer> layers;
    std::vector<std::string> warnings;
};

// Multi-level clustering over day profiles. `profiles` holds one day-profile
// series per cell. The sleeping cells' entries at `hidden_slots` are ignored:
// they are bootstrapped, then at every layer the cells are re-clustered and each
// hidden entry is replaced by the mean of the active members of its cluster.
MlcTrace mlc_run(const TrafficGrid& profiles, std::span<const CellId> sleeping,
                 std::span<const std::size_t> hidden_slots, const MlcConfig& cfg);

// Estimated load at day-profile slot `slot` for every sleeping cell, after
// cfg.layers layers. `grid` carries full multi-day series.
std::map<CellId, double> mlc_estimate(const TrafficGrid& grid, std::span<const CellId> sleeping, std::size_t slot,
                                      const MlcConfig& cfg);

// One row per (cell, layer): cell_id,layer,cluster,estimate at the given hidden slot position.
void write_mlc_trace_csv(std::ostream& out, const MlcTrace& trace, std::size_t hidden_position = 0);

} // namespace loadest::cluster
