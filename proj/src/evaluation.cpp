#include "loadest/evaluation.hpp"

#include "loadest/random.hpp"
#include "loadest/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace loadest::eval {

namespace {

using data::CellId;
using data::TrafficGrid;

void check_common(std::size_t iterations, std::size_t sleeping, std::size_t cells) {
    if (iterations == 0) {
        throw std::invalid_argument("iterations must be at least 1");
    }
    if (sleeping == 0 || sleeping >= cells) {
        throw std::invalid_argument("sleeping cells per iteration must lie in [1, cell count)");
    }
}

std::vector<CellId> draw_sleeping(const TrafficGrid& grid, std::size_t count, std::uint64_t seed) {
    auto rng = make_rng(seed);
    const auto perm = random_permutation(grid.size(), rng);
    std::vector<CellId> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(grid[perm[k]].id);
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Running |error| / actual sums for one configuration within one trial.
struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;

    void add(double actual, double predicted) {
        sum += std::abs(predicted - actual) / std::max(actual, kMapeFloor);
        ++count;
    }
    double percent() const { return 100.0 * sum / static_cast<double>(count); }
};

} // namespace

double mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("MAPE inputs differ in length");
    }
    if (actual.empty()) {
        throw std::invalid_argument("MAPE of an empty set");
    }
    Accumulator acc;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        acc.add(actual[k], predicted[k]);
    }
    return acc.percent();
}

EstimationError EstimationError::from_trials(std::vector<double> trial_mape) {
    if (trial_mape.empty()) {
        throw std::invalid_argument("an estimation error needs at least one trial");
    }
    EstimationError e;
    e.trial_mape = std::move(trial_mape);
    const auto n = static_cast<double>(e.trial_mape.size());
    e.mean = std::accumulate(e.trial_mape.begin(), e.trial_mape.end(), 0.0) / n;
    if (e.trial_mape.size() > 1) {
        double ss = 0.0;
        for (double v : e.trial_mape) {
            ss += (v - e.mean) * (v - e.mean);
        }
        e.stddev = std::sqrt(ss / (n - 1.0));
    }
    return e;
}

std::string to_string(SpatialEstimator e) {
    switch (e) {
    case SpatialEstimator::Mean:
        return "mean";
    case SpatialEstimator::Idw:
        return "idw";
    case SpatialEstimator::Random:
        return "random";
    case SpatialEstimator::RandomIdw:
        return "random-idw";
    }
    return "unknown";
}

SpatialEstimator spatial_estimator_from_string(const std::string& name) {
    for (auto e : {SpatialEstimator::Mean, SpatialEstimator::Idw, SpatialEstimator::Random,
                   SpatialEstimator::RandomIdw}) {
        if (to_string(e) == name) {
            return e;
        }
    }
    throw std::invalid_argument("unknown spatial estimator '" + name + "'");
}

std::vector<ResultRow> run_spatial_experiment(const TrafficGrid& grid, const SpatialExperimentConfig& cfg) {
    check_common(cfg.iterations, cfg.sleeping_per_iteration, grid.size());
    if (cfg.estimators.empty() || cfg.neighbor_counts.empty()) {
        throw std::invalid_argument("spatial sweep needs estimators and neighbor counts");
    }
    const bool weighted = std::any_of(cfg.estimators.begin(), cfg.estimators.end(), [](SpatialEstimator e) {
        return e == SpatialEstimator::Idw || e == SpatialEstimator::RandomIdw;
    });
    if (weighted && cfg.exponents.empty()) {
        throw std::invalid_argument("weighted estimators need at least one exponent");
    }
    const std::size_t max_n = *std::max_element(cfg.neighbor_counts.begin(), cfg.neighbor_counts.end());
    if (max_n + cfg.sleeping_per_iteration > grid.size()) {
        throw std::invalid_argument("neighbor count " + std::to_string(max_n) + " is infeasible on " +
                                    std::to_string(grid.size()) + " cells");
    }

    const auto profiles = data::day_profile_grid(grid);
    const std::size_t slots = profiles.series_length();

    // One configuration per (estimator, n, N); unweighted estimators carry n = 0.
    struct Config {
        SpatialEstimator estimator;
        double exponent;
        std::size_t neighbors;
    };
    std::vector<Config> configs;
    for (auto e : cfg.estimators) {
        const bool w = e == SpatialEstimator::Idw || e == SpatialEstimator::RandomIdw;
        const std::vector<double> ns = w ? cfg.exponents : std::vector<double>{0.0};
        for (double n : ns) {
            for (auto N : cfg.neighbor_counts) {
                configs.push_back({e, n, N});
            }
        }
    }
    std::vector<std::vector<double>> trials(configs.size());

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        const auto sleeping = draw_sleeping(profiles, cfg.sleeping_per_iteration, derive_seed(cfg.seed, {iter}));
        std::vector<Accumulator> acc(configs.size());
        for (std::size_t s = 0; s < sleeping.size(); ++s) {
            const auto target = sleeping[s];
            const auto& truth = profiles.at(target).series.values;
            const auto nearest = spatial::nearest_candidates(profiles, target, max_n, sleeping);
            for (std::size_t k = 0; k < configs.size(); ++k) {
                const auto& c = configs[k];
                std::vector<spatial::Candidate> picked;
                if (c.estimator == SpatialEstimator::Mean || c.estimator == SpatialEstimator::Idw) {
                    picked.assign(nearest.begin(), nearest.begin() + static_cast<std::ptrdiff_t>(c.neighbors));
                } else {
                    picked = spatial::random_candidates(profiles, target, c.neighbors,
                                                        derive_seed(cfg.seed, {iter, s, c.neighbors}), sleeping);
                }
                const spatial::WeightingConfig wc{c.exponent};
                for (std::size_t t = 0; t < slots; ++t) {
                    const auto ns = spatial::make_neighbor_set(profiles, target, picked, t);
                    const bool w = c.estimator == SpatialEstimator::Idw || c.estimator == SpatialEstimator::RandomIdw;
                    const double est = w ? spatial::estimate_distance_weighted(ns, wc)
                                         : spatial::estimate_unweighted_mean(ns);
                    acc[k].add(truth[t], est);
                }
            }
        }
        for (std::size_t k = 0; k < configs.size(); ++k) {
            trials[k].push_back(acc[k].percent());
        }
    }

    std::vector<ResultRow> rows;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        rows.push_back({cfg.experiment, to_string(configs[k].estimator), configs[k].exponent,
                        static_cast<double>(configs[k].neighbors), EstimationError::from_trials(std::move(trials[k]))});
    }
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.estimator, a.param1, a.param2) < std::tie(b.estimator, b.param1, b.param2);
    });
    return rows;
}

std::vector<ResultRow> run_mlc_experiment(const TrafficGrid& grid, const MlcExperimentConfig& cfg) {
    check_common(cfg.iterations, cfg.sleeping_per_iteration, grid.size());
    if (cfg.layers.empty() || std::find(cfg.layers.begin(), cfg.layers.end(), 0) != cfg.layers.end()) {
        throw std::invalid_argument("layer sweep must list layer counts >= 1");
    }
    const auto profiles = data::day_profile_grid(grid);
    const std::size_t slots = profiles.series_length();
    if (cfg.hidden_block == 0 || cfg.hidden_block > slots) {
        throw std::invalid_argument("hidden_block must lie in [1, slots_per_day]");
    }

    auto mlc = cfg.mlc;
    mlc.layers = *std::max_element(cfg.layers.begin(), cfg.layers.end());

    std::vector<std::vector<double>> trials(cfg.layers.size());
    std::size_t clusters = 0;
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        const auto sleeping = draw_sleeping(profiles, cfg.sleeping_per_iteration, derive_seed(cfg.seed, {iter}));
        std::vector<Accumulator> acc(cfg.layers.size());
        for (std::size_t start = 0, block = 0; start < slots; start += cfg.hidden_block, ++block) {
            std::vector<std::size_t> hidden;
            for (std::size_t t = start; t < std::min(slots, start + cfg.hidden_block); ++t) {
                hidden.push_back(t);
            }
            mlc.seed = derive_seed(cfg.seed, {iter, block, 0x31c});
            const auto trace = cluster::mlc_run(profiles, sleeping, hidden, mlc);
            clusters = trace.clusters;
            for (std::size_t k = 0; k < cfg.layers.size(); ++k) {
                const auto& layer = trace.layers[cfg.layers[k] - 1];
                for (std::size_t s = 0; s < sleeping.size(); ++s) {
                    const auto& truth = profiles.at(sleeping[s]).series.values;
                    for (std::size_t h = 0; h < hidden.size(); ++h) {
                        acc[k].add(truth[hidden[h]], layer.estimates[s][h]);
                    }
                }
            }
        }
        for (std::size_t k = 0; k < cfg.layers.size(); ++k) {
            trials[k].push_back(acc[k].percent());
        }
    }

    std::vector<ResultRow> rows;
    for (std::size_t k = 0; k < cfg.layers.size(); ++k) {
        rows.push_back({cfg.experiment, "mlc", static_cast<double>(cfg.layers[k]), static_cast<double>(clusters),
                        EstimationError::from_trials(std::move(trials[k]))});
    }
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.param1 < b.param1; });
    return rows;
}

double temporal_test_mape(const data::TrafficSeries& series, std::size_t window, const lstm::TrainConfig& train,
                          double zscore_threshold, double train_fraction, std::uint64_t split_seed,
                          lstm::LstmParams* model) {
    const auto filtered = data::remove_outliers_zscore(series, zscore_threshold);
    const auto samples = data::make_windows(filtered, window);
    const auto split = data::split_train_test(samples, train_fraction, split_seed);
    if (split.train.empty() || split.test.empty()) {
        throw std::invalid_argument("series too short for a train/test split");
    }
    auto trained = lstm::train(split.train, train);
    std::vector<double> actual;
    std::vector<double> predicted;
    for (const auto& s : split.test) {
        actual.push_back(s.target);
        predicted.push_back(lstm::predict(trained.params, s.input));
    }
    if (model) {
        *model = std::move(trained.params);
    }
    return mape(actual, predicted);
}

std::vector<ResultRow> run_temporal_experiment(const TrafficGrid& grid, const TemporalExperimentConfig& cfg) {
    if (cfg.windows.empty() || cfg.units.empty()) {
        throw std::invalid_argument("temporal sweep needs window sizes and unit counts");
    }
    if (cfg.cells == 0 || cfg.cells > grid.size()) {
        throw std::invalid_argument("temporal experiment cell count must lie in [1, cell count]");
    }
    const std::size_t max_window = *std::max_element(cfg.windows.begin(), cfg.windows.end());
    if (grid.series_length() < 2 * (max_window + 1)) {
        throw std::invalid_argument("series of length " + std::to_string(grid.series_length()) +
                                    " is too short for window " + std::to_string(max_window));
    }

    auto rng = make_rng(derive_seed(cfg.seed, {0x7e}));
    const auto perm = random_permutation(grid.size(), rng);

    std::vector<ResultRow> rows;
    for (auto window : cfg.windows) {
        for (auto units : cfg.units) {
            std::vector<double> trial;
            for (std::size_t c = 0; c < cfg.cells; ++c) {
                auto train = cfg.train;
                train.hidden = units;
                train.seed = derive_seed(cfg.seed, {c, 0x1a});
                trial.push_back(temporal_test_mape(grid[perm[c]].series, window, train, cfg.zscore_threshold,
                                                   cfg.train_fraction, derive_seed(cfg.seed, {c, 0x5b})));
            }
            rows.push_back({cfg.experiment, "lstm", static_cast<double>(window), static_cast<double>(units),
                            EstimationError::from_trials(std::move(trial))});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.param1, a.param2) < std::tie(b.param1, b.param2);
    });
    return rows;
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
    out << "experiment,estimator,param1,param2,mean_mape,std_mape,trials\n";
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.estimator << ',' << fmt(r.param1) << ',' << fmt(r.param2) << ','
            << fmt(r.error.mean) << ',' << fmt(r.error.stddev) << ',' << r.error.trials() << '\n';
    }
}

void write_figure_csv(std::ostream& out, const std::string& figure, std::span<const ResultRow> rows) {
    if (figure == "fig2") {
        out << "n,N,mean_mape,std_mape\n";
        for (const auto& r : rows) {
            out << fmt(r.param1) << ',' << fmt(r.param2) << ',' << fmt(r.error.mean) << ','
                << fmt(r.error.stddev) << '\n';
        }
    } else if (figure == "fig3") {
        out << "method,x,mean_mape,std_mape\n";
        for (const auto& r : rows) {
            std::string method = r.estimator;
            if (r.estimator == "idw" || r.estimator == "random-idw") {
                method += "(n=" + fmt(r.param1) + ")";
            }
            const double x = r.estimator == "mlc" ? r.param1 : r.param2;
            out << method << ',' << fmt(x) << ',' << fmt(r.error.mean) << ',' << fmt(r.error.stddev) << '\n';
        }
    } else if (figure == "fig7") {
        out << "window,units,mape\n";
        for (const auto& r : rows) {
            out << fmt(r.param1) << ',' << fmt(r.param2) << ',' << fmt(r.error.mean) << '\n';
        }
    } else {
        throw std::invalid_argument("unknown figure '" + figure + "'");
    }
}

} // namespace loadest::eval
