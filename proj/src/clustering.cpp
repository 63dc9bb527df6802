#include "loadest/clustering.hpp"

#include "loadest/random.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace loadest::cluster {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void validate_points(std::span<const FeaturePoint> points, std::size_t clusters) {
    if (clusters == 0) {
        throw std::invalid_argument("cluster count must be at least 1");
    }
    if (clusters > points.size()) {
        throw std::invalid_argument("cluster count " + std::to_string(clusters) + " exceeds the " +
                                    std::to_string(points.size()) + " points");
    }
    const std::size_t dim = points.front().features.size();
    if (dim == 0) {
        throw std::invalid_argument("feature vectors must have at least one dimension");
    }
    for (const auto& p : points) {
        if (p.features.size() != dim) {
            throw std::invalid_argument("feature dimension mismatch at cell " + std::to_string(p.id.value));
        }
        for (double v : p.features) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("non-finite feature at cell " + std::to_string(p.id.value));
            }
        }
    }
}

std::size_t nearest_centroid(std::span<const double> x, const std::vector<std::vector<double>>& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < centroids.size(); ++g) {
        const double d = squared_distance(x, centroids[g]);
        if (d < best_d) {
            best_d = d;
            best = g;
        }
    }
    return best;
}

std::vector<std::vector<double>> plus_plus_init(std::span<const FeaturePoint> points, std::size_t clusters,
                                                Rng& rng) {
    const std::size_t n = points.size();
    std::vector<std::size_t> chosen;
    chosen.push_back(static_cast<std::size_t>(uniform_index(rng, n)));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (chosen.size() < clusters) {
        const auto& last = points[chosen.back()].features;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i].features, last));
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = uniform01(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && r < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                // r landed on the rounding tail; take the last point with mass.
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // Every point coincides with a chosen centroid.
            for (std::size_t i = 0; i < n; ++i) {
                if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
                    pick = i;
                    break;
                }
            }
        }
        chosen.push_back(pick);
    }
    std::vector<std::vector<double>> centroids;
    centroids.reserve(clusters);
    for (auto i : chosen) {
        centroids.push_back(points[i].features);
    }
    return centroids;
}

void repair_empty_clusters(std::span<const FeaturePoint> points, const std::vector<std::vector<double>>& centroids,
                           std::vector<std::size_t>& assignment) {
    const std::size_t clusters = centroids.size();
    std::vector<std::size_t> sizes(clusters, 0);
    for (auto a : assignment) {
        ++sizes[a];
    }
    for (std::size_t g = 0; g < clusters; ++g) {
        if (sizes[g] != 0) {
            continue;
        }
        std::size_t far = points.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (sizes[assignment[i]] <= 1) {
                continue;
            }
            const double d = squared_distance(points[i].features, centroids[assignment[i]]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        --sizes[assignment[far]];
        assignment[far] = g;
        sizes[g] = 1;
    }
}

std::vector<std::vector<double>> member_means(std::span<const FeaturePoint> points,
                                              const std::vector<std::size_t>& assignment, std::size_t clusters) {
    const std::size_t dim = points.front().features.size();
    std::vector<std::vector<double>> means(clusters, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& m = means[assignment[i]];
        const auto& x = points[i].features;
        for (std::size_t k = 0; k < dim; ++k) {
            m[k] += x[k];
        }
        ++counts[assignment[i]];
    }
    for (std::size_t g = 0; g < clusters; ++g) {
        for (double& v : means[g]) {
            v /= static_cast<double>(counts[g]);
        }
    }
    return means;
}

} // namespace

std::size_t ClusterModel::cluster_of(CellId id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) {
        throw std::out_of_range("cell " + std::to_string(id.value) + " is not in the cluster model");
    }
    return assignment[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(clusters, 0);
    for (auto a : assignment) {
        ++sizes[a];
    }
    return sizes;
}

ClusterModel kmeans(std::span<const FeaturePoint> points, std::size_t clusters, std::uint64_t seed,
                    const KMeansOptions& options) {
    if (points.empty()) {
        throw std::invalid_argument("kmeans needs at least one point");
    }
    validate_points(points, clusters);

    auto rng = make_rng(seed);
    ClusterModel model;
    model.clusters = clusters;
    model.centroids = plus_plus_init(points, clusters, rng);
    model.assignment.assign(points.size(), 0);
    model.ids.reserve(points.size());
    for (const auto& p : points) {
        model.ids.push_back(p.id);
    }

    for (std::size_t iter = 1; iter <= std::max<std::size_t>(options.max_iter, 1); ++iter) {
        model.iterations = iter;
        for (std::size_t i = 0; i < points.size(); ++i) {
            model.assignment[i] = nearest_centroid(points[i].features, model.centroids);
        }
        repair_empty_clusters(points, model.centroids, model.assignment);
        auto updated = member_means(points, model.assignment, clusters);
        double movement = 0.0;
        for (std::size_t g = 0; g < clusters; ++g) {
            movement = std::max(movement, std::sqrt(squared_distance(updated[g], model.centroids[g])));
        }
        model.centroids = std::move(updated);
        if (movement < options.tol) {
            model.converged = true;
            break;
        }
    }
    model.sse = sse(points, model);
    return model;
}

ClusterModel kmeans_best_of(std::span<const FeaturePoint> points, std::size_t clusters, std::uint64_t seed,
                            std::size_t restarts, const KMeansOptions& options) {
    if (restarts == 0) {
        throw std::invalid_argument("restarts must be at least 1");
    }
    ClusterModel best = kmeans(points, clusters, derive_seed(seed, {0}), options);
    for (std::size_t r = 1; r < restarts; ++r) {
        auto candidate = kmeans(points, clusters, derive_seed(seed, {r}), options);
        if (candidate.sse < best.sse) {
            best = std::move(candidate);
        }
    }
    return best;
}

double sse(std::span<const FeaturePoint> points, const ClusterModel& model) {
    if (model.assignment.size() != points.size()) {
        throw std::invalid_argument("cluster model does not cover every point");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto g = model.assignment[i];
        if (g >= model.centroids.size()) {
            throw std::invalid_argument("point " + std::to_string(i) + " is unassigned");
        }
        total += squared_distance(points[i].features, model.centroids[g]);
    }
    return total;
}

std::size_t knee_index(std::span<const double> curve) {
    if (curve.size() < 3) {
        return 0;
    }
    const double top = curve.front();
    const double bottom = curve.back();
    const double drop = top - bottom;
    if (!(drop > 1e-12 * std::max(1.0, std::abs(top)))) {
        return 0;
    }
    const double last = static_cast<double>(curve.size() - 1);
    std::size_t best = 0;
    double best_gap = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double x = static_cast<double>(i) / last;
        const double y = (curve[i] - bottom) / drop;
        // Perpendicular distance to the chord x + y = 1, up to the constant 1/sqrt(2).
        const double gap = 1.0 - x - y;
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return best;
}

ElbowResult elbow_select_g(std::span<const FeaturePoint> points, std::size_t g_min, std::size_t g_max,
                           std::uint64_t seed, std::size_t restarts, const KMeansOptions& options) {
    if (g_min == 0 || g_min > g_max) {
        throw std::invalid_argument("empty cluster-count range");
    }
    if (g_max > points.size()) {
        throw std::invalid_argument("cluster-count range exceeds the point count");
    }
    constexpr std::size_t kExtraRounds = 4;
    ElbowResult result;
    for (std::size_t g = g_min; g <= g_max; ++g) {
        double value = kmeans_best_of(points, g, derive_seed(seed, {g}), restarts, options).sse;
        // A rise over the previous g gets extra restarts, then the curve is clamped.
        for (std::size_t round = 1; round <= kExtraRounds && !result.sse_curve.empty() &&
                                    value > result.sse_curve.back();
             ++round) {
            value = std::min(value,
                             kmeans_best_of(points, g, derive_seed(seed, {g, round}), restarts, options).sse);
        }
        if (!result.sse_curve.empty()) {
            value = std::min(value, result.sse_curve.back());
        }
        result.candidates.push_back(g);
        result.sse_curve.push_back(value);
    }
    result.clusters = result.candidates[knee_index(result.sse_curve)];
    return result;
}

MlcTrace mlc_run(const TrafficGrid& profiles, std::span<const CellId> sleeping,
                 std::span<const std::size_t> hidden_slots, const MlcConfig& cfg) {
    if (cfg.layers == 0) {
        throw std::invalid_argument("MLC needs at least one layer");
    }
    if (sleeping.empty()) {
        throw std::invalid_argument("MLC needs at least one sleeping cell");
    }
    if (hidden_slots.empty()) {
        throw std::invalid_argument("MLC needs at least one hidden slot");
    }
    const std::size_t n = profiles.size();
    const std::size_t dim = profiles.series_length();
    for (auto s : hidden_slots) {
        if (s >= dim) {
            throw std::out_of_range("hidden slot " + std::to_string(s) + " beyond profile length");
        }
    }

    std::vector<char> is_sleeping(n, 0);
    std::vector<std::size_t> sleeping_index;
    for (const auto& id : sleeping) {
        const auto idx = profiles.index_of(id);
        if (!idx) {
            throw std::out_of_range("unknown sleeping cell " + std::to_string(id.value));
        }
        if (is_sleeping[*idx]) {
            throw std::invalid_argument("sleeping cell listed twice");
        }
        is_sleeping[*idx] = 1;
        sleeping_index.push_back(*idx);
    }
    const std::size_t active = n - sleeping_index.size();
    if (active == 0) {
        throw std::invalid_argument("sleeping set must be a strict subset of the cells");
    }

    std::vector<FeaturePoint> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        points[i].id = profiles[i].id;
        points[i].features = profiles[i].series.values;
    }

    // Global mean of the active cells per hidden slot; also the empty-cluster fallback.
    std::vector<double> global_mean(hidden_slots.size(), 0.0);
    for (std::size_t h = 0; h < hidden_slots.size(); ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_sleeping[i]) {
                global_mean[h] += points[i].features[hidden_slots[h]];
            }
        }
        global_mean[h] /= static_cast<double>(active);
    }
    for (auto i : sleeping_index) {
        for (std::size_t h = 0; h < hidden_slots.size(); ++h) {
            points[i].features[hidden_slots[h]] = global_mean[h];
        }
    }

    MlcTrace trace;
    trace.sleeping.assign(sleeping.begin(), sleeping.end());
    trace.hidden_slots.assign(hidden_slots.begin(), hidden_slots.end());

    if (cfg.clusters) {
        trace.clusters = *cfg.clusters;
    } else {
        const std::size_t g_max = std::min({cfg.elbow_max, active, n});
        trace.clusters = elbow_select_g(points, 1, g_max, derive_seed(cfg.seed, {0xe1b0}), 5, cfg.kmeans).clusters;
    }
    if (trace.clusters == 0 || trace.clusters > active) {
        throw std::invalid_argument("cluster count " + std::to_string(trace.clusters) + " exceeds the " +
                                    std::to_string(active) + " active cells");
    }

    const std::size_t G = trace.clusters;
    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        if (layer >= 2) {
            // Identical inputs and seed give an identical layer: stop at the fixed point.
            const auto& a = trace.layers[layer - 1].estimates;
            const auto& b = trace.layers[layer - 2].estimates;
            bool settled = true;
            for (std::size_t s = 0; s < a.size() && settled; ++s) {
                for (std::size_t h = 0; h < a[s].size(); ++h) {
                    if (std::abs(a[s][h] - b[s][h]) > 1e-12) {
                        settled = false;
                        break;
                    }
                }
            }
            if (settled) {
                trace.layers.push_back(trace.layers.back());
                continue;
            }
        }

        const auto model = kmeans_best_of(points, G, cfg.seed, cfg.restarts, cfg.kmeans);

        std::vector<std::vector<double>> sums(G, std::vector<double>(hidden_slots.size(), 0.0));
        std::vector<std::size_t> counts(G, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (is_sleeping[i]) {
                continue;
            }
            const auto g = model.assignment[i];
            ++counts[g];
            for (std::size_t h = 0; h < hidden_slots.size(); ++h) {
                sums[g][h] += points[i].features[hidden_slots[h]];
            }
        }

        MlcLayer out;
        out.cluster.reserve(sleeping_index.size());
        out.estimates.reserve(sleeping_index.size());
        bool warned = false;
        for (auto i : sleeping_index) {
            const auto g = model.assignment[i];
            std::vector<double> est(hidden_slots.size());
            for (std::size_t h = 0; h < hidden_slots.size(); ++h) {
                est[h] = counts[g] > 0 ? sums[g][h] / static_cast<double>(counts[g]) : global_mean[h];
            }
            if (counts[g] == 0 && !warned) {
                trace.warnings.push_back("layer " + std::to_string(layer + 1) + ": cluster " + std::to_string(g) +
                                         " has no active member; used the global active mean");
                warned = true;
            }
            out.cluster.push_back(g);
            out.estimates.push_back(std::move(est));
        }
        // Estimates replace the hidden entries before the next layer.
        for (std::size_t s = 0; s < sleeping_index.size(); ++s) {
            for (std::size_t h = 0; h < hidden_slots.size(); ++h) {
                points[sleeping_index[s]].features[hidden_slots[h]] = out.estimates[s][h];
            }
        }
        trace.layers.push_back(std::move(out));
    }
    return trace;
}

std::map<CellId, double> mlc_estimate(const TrafficGrid& grid, std::span<const CellId> sleeping, std::size_t slot,
                                      const MlcConfig& cfg) {
    const std::size_t spd = grid.slots_per_day();
    if (slot >= spd) {
        throw std::out_of_range("slot " + std::to_string(slot) + " beyond the day profile");
    }
    if (cfg.sleep_duration == 0 || cfg.sleep_duration > spd) {
        throw std::invalid_argument("sleep_duration must lie in [1, slots_per_day]");
    }
    std::vector<std::size_t> hidden;
    for (std::size_t k = 0; k < cfg.sleep_duration; ++k) {
        hidden.push_back((slot + spd - k) % spd);
    }
    const auto trace = mlc_run(data::day_profile_grid(grid), sleeping, hidden, cfg);
    std::map<CellId, double> out;
    for (std::size_t s = 0; s < trace.sleeping.size(); ++s) {
        out[trace.sleeping[s]] = trace.layers.back().estimates[s][0];
    }
    return out;
}

void write_mlc_trace_csv(std::ostream& out, const MlcTrace& trace, std::size_t hidden_position) {
    out << "cell_id,layer,cluster,estimate\n";
    const auto old_precision = out.precision(17);
    for (std::size_t s = 0; s < trace.sleeping.size(); ++s) {
        for (std::size_t l = 0; l < trace.layers.size(); ++l) {
            out << trace.sleeping[s].value << ',' << (l + 1) << ',' << trace.layers[l].cluster[s] << ','
                << trace.layers[l].estimates[s].at(hidden_position) << '\n';
        }
    }
    out.precision(old_precision);
}

} // namespace loadest::cluster
