#include "loadest/cli.hpp"
#include "loadest/clustering.hpp"
#include "loadest/evaluation.hpp"
#include "loadest/lstm.hpp"
#include "loadest/power.hpp"
#include "loadest/random.hpp"
#include "loadest/spatial.hpp"
#include "loadest/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace loadest;

namespace {

// Tolerances and sizes for every criterion.
constexpr double kPowerTol = 1e-12;
constexpr double kIdwTol = 1e-12;
constexpr std::size_t kOracleSeeds = 20;
constexpr std::size_t kIterationsPerSeed = 10;  // 200 trials per (n, N)
constexpr double kMinReductionN1toN5 = 0.25;
constexpr std::size_t kKmeansInstances = 30;
constexpr std::size_t kKmeansRestarts = 10;
constexpr double kKmeansSseTol = 1e-9;
constexpr double kFixedPointTol = 1e-9;
constexpr std::size_t kElbowRequired = 18;
constexpr double kElbowNoise = 0.05;
constexpr double kMlcMaxMape = 1.0;
constexpr double kMlcMonotoneSlack = 1e-9;
constexpr double kGradStep = 1e-5;
constexpr double kGradMaxRelErr = 1e-4;
constexpr double kGradFloor = 1e-6;
constexpr std::size_t kGradDraws = 20;
constexpr std::size_t kSineDays = 30;
constexpr double kLstmMaxMape = 5.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------

Outcome power_exactness() {
    using power::BsPowerProfile;
    using power::BsRole;
    struct Case {
        BsPowerProfile profile;
        double load;
        double expected;
    };
    const BsPowerProfile sbs{56.0, 2.6, 6.3, 6.0, BsRole::Sbs};
    const BsPowerProfile mbs{130.0, 4.7, 20.0, 75.0, BsRole::Mbs};
    const BsPowerProfile odd{84.0, 3.1, 1.0, 39.0, BsRole::Sbs};
    const BsPowerProfile tiny{12.5, 2.0, 0.13, 4.3, BsRole::Sbs};
    const std::vector<Case> cases = {
        {sbs, 0.0, 6.0},    {sbs, 0.25, 60.095}, {sbs, 1.0, 72.38},   {mbs, 0.0, 75.0},   {mbs, 0.6, 186.4},
        {mbs, 1.0, 224.0},  {odd, 0.0, 39.0},    {odd, 0.5, 85.55},   {tiny, 0.01, 12.5026}, {tiny, 0.0, 4.3},
    };
    double worst = 0.0;
    for (const auto& c : cases) {
        worst = std::max(worst, std::abs(power::bs_power(c.profile, c.load) - c.expected));
    }
    const std::vector<power::SbsLoad> cells = {{sbs, 0.0}, {sbs, 1.0}, {sbs, 0.4}};
    const auto np = power::network_power(mbs, 0.5, mbs, 0.3, cells);
    worst = std::max(worst, std::abs(np.haps - 177.0));
    worst = std::max(worst, std::abs(np.mbs - 158.2));
    worst = std::max(worst, std::abs(np.sbs[0] - 6.0));
    worst = std::max(worst, std::abs(np.sbs[1] - 72.38));
    worst = std::max(worst, std::abs(np.sbs[2] - 62.552));
    worst = std::max(worst, std::abs(np.total - 476.132));
    return {worst <= kPowerTol, "10 single-station cases + network total, max |err| = " + num(worst)};
}

// ---------------------------------------------------------------------------

double direct_weighted(const std::vector<double>& loads, const std::vector<double>& dist, double n) {
    const double d_max = *std::max_element(dist.begin(), dist.end());
    double num_sum = 0.0;
    double den_sum = 0.0;
    for (std::size_t i = 0; i < loads.size(); ++i) {
        const double w = d_max / std::pow(dist[i], n);
        num_sum += loads[i] * w;
        den_sum += w;
    }
    return num_sum / den_sum;
}

Outcome idw_exactness() {
    auto rng = make_rng(2024);
    double worst_direct = 0.0;
    double worst_rescale = 0.0;
    for (std::size_t trial = 0; trial < 200; ++trial) {
        const std::size_t count = 1 + uniform_index(rng, 40);
        const double n = std::vector<double>{1.0, 2.0, 3.0, 5.0, 10.0}[trial % 5];
        std::vector<double> loads(count);
        std::vector<double> dist(count);
        spatial::NeighborSet ns;
        for (std::size_t i = 0; i < count; ++i) {
            loads[i] = uniform01(rng);
            dist[i] = uniform(rng, 235.0, 3000.0);
            ns.neighbors.push_back({data::CellId{static_cast<std::uint32_t>(i)}, dist[i], loads[i]});
        }
        ns.d_max = *std::max_element(dist.begin(), dist.end());
        const spatial::WeightingConfig wc{n};
        const double est = spatial::estimate_distance_weighted(ns, wc);
        worst_direct = std::max(worst_direct, std::abs(est - direct_weighted(loads, dist, n)));

        for (double k : {0.01, 0.5, 3.0, 117.0}) {
            auto scaled = ns;
            for (auto& nb : scaled.neighbors) {
                nb.distance *= k;
            }
            scaled.d_max *= k;
            worst_rescale = std::max(worst_rescale, std::abs(spatial::estimate_distance_weighted(scaled, wc) - est));
        }
    }
    const bool ok = worst_direct <= kIdwTol && worst_rescale <= kIdwTol;
    return {ok, "200 neighbor sets, max |est - direct| = " + num(worst_direct) +
                    ", max rescale drift = " + num(worst_rescale)};
}

// ---------------------------------------------------------------------------

// Mean MAPE per (n, N) pooled over every oracle-grid seed and iteration.
using SweepTable = std::map<std::pair<double, std::size_t>, double>;

const SweepTable& oracle_sweep() {
    static const SweepTable table = [] {
        std::map<std::pair<double, std::size_t>, std::vector<double>> trials;
        for (std::size_t s = 0; s < kOracleSeeds; ++s) {
            data::SyntheticConfig syn;
            syn.seed = 1000 + s;
            const auto grid = data::generate_synthetic(syn);
            eval::SpatialExperimentConfig cfg;
            cfg.exponents = {1.0, 3.0, 5.0, 10.0};
            cfg.neighbor_counts = {10, 50, 100, 200};
            cfg.iterations = kIterationsPerSeed;
            cfg.seed = derive_seed(syn.seed, {77});
            for (const auto& row : eval::run_spatial_experiment(grid, cfg)) {
                auto& v = trials[{row.param1, static_cast<std::size_t>(row.param2)}];
                v.insert(v.end(), row.error.trial_mape.begin(), row.error.trial_mape.end());
            }
        }
        SweepTable out;
        for (auto& [key, v] : trials) {
            out[key] = eval::EstimationError::from_trials(v).mean;
        }
        return out;
    }();
    return table;
}

Outcome exponent_trend() {
    const auto& t = oracle_sweep();
    const double m1 = t.at({1.0, 50});
    const double m3 = t.at({3.0, 50});
    const double m5 = t.at({5.0, 50});
    const double reduction = (m1 - m5) / m1;
    const bool ok = m1 > m3 && m3 > m5 && reduction >= kMinReductionN1toN5;
    return {ok, "N=50, " + std::to_string(kOracleSeeds * kIterationsPerSeed) + " trials: MAPE n=1 " + num(m1) +
                    "%, n=3 " + num(m3) + "%, n=5 " + num(m5) + "%, reduction " + num(100.0 * reduction) + "%"};
}

Outcome neighbor_count_trend() {
    const auto& t = oracle_sweep();
    const double small = t.at({1.0, 10});
    const double large = t.at({1.0, 200});
    return {large > small, "n=1: MAPE N=10 " + num(small) + "%, N=200 " + num(large) + "%"};
}

double spread_over_n(const SweepTable& t, double exponent) {
    double lo = 1e300;
    double hi = -1e300;
    for (std::size_t count : {10, 50, 100, 200}) {
        lo = std::min(lo, t.at({exponent, count}));
        hi = std::max(hi, t.at({exponent, count}));
    }
    return hi - lo;
}

Outcome exponent_flattens_neighbor_effect() {
    const auto& t = oracle_sweep();
    const double s1 = spread_over_n(t, 1.0);
    const double s10 = spread_over_n(t, 10.0);
    return {s10 < s1, "spread over N: n=1 " + num(s1) + " points, n=10 " + num(s10) + " points"};
}

// ---------------------------------------------------------------------------

double partition_sse(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& label,
                     std::size_t clusters) {
    const std::size_t dim = pts.front().size();
    double total = 0.0;
    for (std::size_t g = 0; g < clusters; ++g) {
        std::vector<double> mean(dim, 0.0);
        std::size_t members = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (label[i] == g) {
                ++members;
                for (std::size_t d = 0; d < dim; ++d) {
                    mean[d] += pts[i][d];
                }
            }
        }
        if (members == 0) {
            return -1.0;
        }
        for (auto& m : mean) {
            m /= static_cast<double>(members);
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (label[i] == g) {
                for (std::size_t d = 0; d < dim; ++d) {
                    total += (pts[i][d] - mean[d]) * (pts[i][d] - mean[d]);
                }
            }
        }
    }
    return total;
}

double exhaustive_min_sse(const std::vector<std::vector<double>>& pts, std::size_t clusters) {
    std::vector<std::size_t> label(pts.size(), 0);
    double best = 1e300;
    while (true) {
        const double s = partition_sse(pts, label, clusters);
        if (s >= 0.0) {
            best = std::min(best, s);
        }
        std::size_t i = 0;
        while (i < label.size() && ++label[i] == clusters) {
            label[i++] = 0;
        }
        if (i == label.size()) {
            break;
        }
    }
    return best;
}

bool lloyd_fixed_point(std::span<const cluster::FeaturePoint> pts, const cluster::ClusterModel& m) {
    auto sq = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) {
            s += (a[d] - b[d]) * (a[d] - b[d]);
        }
        return s;
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double own = sq(pts[i].features, m.centroids[m.assignment[i]]);
        for (const auto& c : m.centroids) {
            if (sq(pts[i].features, c) < own - kFixedPointTol) {
                return false;
            }
        }
    }
    for (std::size_t g = 0; g < m.clusters; ++g) {
        std::vector<double> mean(pts.front().features.size(), 0.0);
        std::size_t members = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (m.assignment[i] == g) {
                ++members;
                for (std::size_t d = 0; d < mean.size(); ++d) {
                    mean[d] += pts[i].features[d];
                }
            }
        }
        if (members == 0) {
            return false;
        }
        for (std::size_t d = 0; d < mean.size(); ++d) {
            if (std::abs(mean[d] / static_cast<double>(members) - m.centroids[g][d]) > kFixedPointTol) {
                return false;
            }
        }
    }
    return true;
}

Outcome kmeans_oracle() {
    auto rng = make_rng(31337);
    double worst = 0.0;
    std::size_t fixed_point_failures = 0;
    std::size_t converged_models = 0;
    for (std::size_t inst = 0; inst < kKmeansInstances; ++inst) {
        const std::size_t count = 3 + uniform_index(rng, 6);
        const std::size_t clusters = 1 + inst % 3;
        const std::size_t dim = 1 + uniform_index(rng, 3);
        std::vector<std::vector<double>> raw(count, std::vector<double>(dim));
        std::vector<cluster::FeaturePoint> pts;
        for (std::size_t i = 0; i < count; ++i) {
            for (auto& v : raw[i]) {
                v = uniform(rng, -5.0, 5.0);
            }
            pts.push_back({data::CellId{static_cast<std::uint32_t>(i)}, raw[i]});
        }
        const auto model = cluster::kmeans_best_of(pts, clusters, 500 + inst, kKmeansRestarts);
        worst = std::max(worst, model.sse - exhaustive_min_sse(raw, clusters));
        for (std::size_t r = 0; r < kKmeansRestarts; ++r) {
            const auto single = cluster::kmeans(pts, clusters, derive_seed(900 + inst, {r}));
            if (single.converged) {
                ++converged_models;
                fixed_point_failures += lloyd_fixed_point(pts, single) ? 0 : 1;
            }
        }
        if (model.converged) {
            ++converged_models;
            fixed_point_failures += lloyd_fixed_point(pts, model) ? 0 : 1;
        }
    }
    const bool ok = worst <= kKmeansSseTol && fixed_point_failures == 0 && converged_models > 0;
    return {ok, std::to_string(kKmeansInstances) + " instances, max SSE excess = " + num(worst) + ", " +
                    std::to_string(converged_models) + " converged models, " +
                    std::to_string(fixed_point_failures) + " fixed-point violations"};
}

// ---------------------------------------------------------------------------

std::vector<cluster::FeaturePoint> profile_points(const data::TrafficGrid& grid) {
    const auto profiles = data::day_profile_grid(grid);
    std::vector<cluster::FeaturePoint> pts;
    for (const auto& c : profiles.cells()) {
        pts.push_back({c.id, c.series.values});
    }
    return pts;
}

Outcome elbow_recovers_three() {
    std::size_t hits = 0;
    std::vector<std::size_t> picks;
    for (std::size_t s = 0; s < kOracleSeeds; ++s) {
        data::ClusteredConfig cfg;
        cfg.noise_std = kElbowNoise;
        cfg.scale_spread = 0.05;
        cfg.num_days = 3;
        cfg.seed = 4000 + s;
        const auto pts = profile_points(data::generate_clustered(cfg).grid);
        const auto res = cluster::elbow_select_g(pts, 1, 8, derive_seed(cfg.seed, {5}));
        picks.push_back(res.clusters);
        hits += res.clusters == 3 ? 1 : 0;
    }
    std::string list;
    for (auto g : picks) {
        list += std::to_string(g);
    }
    return {hits >= kElbowRequired, std::to_string(hits) + "/" + std::to_string(kOracleSeeds) +
                                        " seeds chose G=3 (picks " + list + ")"};
}

// ---------------------------------------------------------------------------

Outcome mlc_converges() {
    data::ClusteredConfig data_cfg;
    data_cfg.num_days = 2;
    data_cfg.seed = 77;
    const auto grid = data::generate_clustered(data_cfg).grid;
    eval::MlcExperimentConfig cfg;
    cfg.iterations = 20;
    cfg.sleeping_per_iteration = 20;
    cfg.mlc.clusters = 3;
    cfg.seed = 99;
    const auto rows = eval::run_mlc_experiment(grid, cfg);
    std::vector<double> curve;
    for (const auto& r : rows) {
        curve.push_back(r.error.mean);
    }
    bool monotone = curve.size() == 7;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        monotone = monotone && curve[i] <= curve[i - 1] + kMlcMonotoneSlack;
    }
    std::string list;
    for (double v : curve) {
        list += (list.empty() ? "" : ", ") + num(v, 4);
    }
    const bool ok = monotone && !curve.empty() && curve.back() < kMlcMaxMape;
    return {ok, "MAPE by L=1..7: " + list + " %"};
}

// ---------------------------------------------------------------------------

double batch_loss(const lstm::LstmParams& p, std::span<const data::WindowSample> batch) {
    double s = 0.0;
    for (const auto& w : batch) {
        s += std::abs(lstm::forward_sequence(p, w.input) - w.target);
    }
    return s / static_cast<double>(batch.size());
}

Outcome lstm_gradient_check() {
    double worst = 0.0;
    for (std::size_t draw = 0; draw < kGradDraws; ++draw) {
        const std::size_t hidden = draw % 2 == 0 ? 2 : 5;
        const std::size_t window = (draw / 2) % 2 == 0 ? 3 : 8;
        auto rng = make_rng(derive_seed(8080, {draw}));
        auto p = lstm::LstmParams::uniform(hidden, 1, 0.8, derive_seed(8081, {draw}));
        std::vector<data::WindowSample> batch(4);
        for (auto& s : batch) {
            s.input.resize(window);
            for (auto& v : s.input) {
                v = uniform01(rng);
            }
            s.target = uniform(rng, -1.0, 2.0);
        }
        const auto g = lstm::backward_bptt(p, batch);
        for (std::size_t k = 0; k < p.values.size(); ++k) {
            const double saved = p.values[k];
            p.values[k] = saved + kGradStep;
            const double up = batch_loss(p, batch);
            p.values[k] = saved - kGradStep;
            const double down = batch_loss(p, batch);
            p.values[k] = saved;
            const double fd = (up - down) / (2.0 * kGradStep);
            const double an = g.grad.values[k];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), kGradFloor});
            worst = std::max(worst, rel);
        }
    }
    return {worst < kGradMaxRelErr, std::to_string(kGradDraws) + " draws, max relative error = " + num(worst)};
}

// ---------------------------------------------------------------------------

Outcome lstm_learns_sine() {
    const auto series = data::sine_series(kSineDays);
    lstm::TrainConfig train;
    train.seed = 11;
    const double h10w12 = eval::temporal_test_mape(series, 12, train, 2.5, 0.6, 12);
    train.hidden = 5;
    const double h5w12 = eval::temporal_test_mape(series, 12, train, 2.5, 0.6, 12);
    const double h5w4 = eval::temporal_test_mape(series, 4, train, 2.5, 0.6, 12);
    const bool ok = h10w12 < kLstmMaxMape && h5w12 < h5w4;
    return {ok, "test MAPE H=10 w=12 " + num(h10w12) + "%, H=5 w=12 " + num(h5w12) + "%, H=5 w=4 " + num(h5w4) +
                    "%"};
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome cli_determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "loadest_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path config = root / "config.json";
    {
        std::ofstream f(config);
        f << R"({
  "seed": 5,
  "data": {"source": "synthetic", "synthetic": {"grid_side": 10, "num_days": 3}},
  "experiment": {
    "iterations": 4,
    "fig2": {"neighbors": [5, 20]},
    "fig3": {"layers": [1, 2, 3], "neighbors": [10]},
    "fig7": {"windows": [4, 6], "units": [3]},
    "training": {"epochs": 3}
  }
})";
    }
    std::size_t files = 0;
    std::size_t mismatched = 0;
    std::string failures;
    for (const std::string fig : {"fig2", "fig3", "fig7"}) {
        std::string outputs[2][2];
        for (int run = 0; run < 2; ++run) {
            const fs::path dir = root / (fig + "_" + std::to_string(run));
            std::ostringstream out;
            std::ostringstream err;
            const int code = cli::run_cli({"--config", config.string(), "--out", dir.string(), "experiment", fig},
                                          out, err);
            if (code != cli::kExitOk) {
                failures += fig + " exit " + std::to_string(code) + " (" + err.str() + ") ";
            }
            outputs[run][0] = slurp(dir / ("results_" + fig + ".csv"));
            outputs[run][1] = slurp(dir / (fig + ".csv"));
        }
        for (int k = 0; k < 2; ++k) {
            ++files;
            if (outputs[0][k].empty() || outputs[0][k] != outputs[1][k]) {
                ++mismatched;
            }
        }
    }
    fs::remove_all(root);
    return {failures.empty() && mismatched == 0,
            std::to_string(files) + " CSVs compared, " + std::to_string(mismatched) + " differ" +
                (failures.empty() ? "" : "; " + failures)};
}

// ---------------------------------------------------------------------------

Outcome data_pipeline_fixtures() {
    std::vector<std::string> broken;

    data::TrafficSeries z;
    z.values = {1.0, 1.0, 1.0, 1.0, 10.0};
    z.slots_per_day = 5;
    // mean 2.8, population std 3.6: z-scores 0.5 and 2.0
    if (data::remove_outliers_zscore(z, 1.5).values != std::vector<double>{1.0, 1.0, 1.0, 1.0}) {
        broken.push_back("zscore drop");
    }
    if (data::remove_outliers_zscore(z, 2.5).values != z.values) {
        broken.push_back("zscore keep");
    }

    const std::vector<double> ramp = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto windows = data::make_windows(ramp, 3);
    if (windows.size() != 7 || windows.front().input != std::vector<double>{0, 1, 2} || windows.front().target != 3 ||
        windows.back().input != std::vector<double>{6, 7, 8} || windows.back().target != 9) {
        broken.push_back("windows");
    }
    if (data::make_windows(ramp, 9).size() != 1) {
        broken.push_back("window edge count");
    }
    try {
        data::make_windows(ramp, 10);
        broken.push_back("window longer than series accepted");
    } catch (const std::invalid_argument&) {
    }

    const auto split10 = data::split_train_test(data::make_windows(std::vector<double>(13, 0.5), 3), 0.6, 3);
    const auto split7 = data::split_train_test(windows, 0.6, 3);
    if (split10.train.size() != 6 || split10.test.size() != 4 || split7.train.size() != 4 || split7.test.size() != 3) {
        broken.push_back("60/40 split sizes");
    }

    data::TrafficSeries two_days;
    two_days.values = {1, 2, 3, 5, 6, 7};
    two_days.slots_per_day = 3;
    if (data::average_day_profile(two_days).values != std::vector<double>{3, 4, 5}) {
        broken.push_back("day profile");
    }

    std::string detail = "z-score, window counts, 60/40 split, day profile";
    for (const auto& b : broken) {
        detail += "; mismatch: " + b;
    }
    return {broken.empty(), detail};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"power model exactness", power_exactness},
        {"distance-weighted estimate exactness and rescale invariance", idw_exactness},
        {"MAPE falls as the distance exponent grows", exponent_trend},
        {"more neighbors hurt at n=1", neighbor_count_trend},
        {"large exponent flattens the neighbor-count effect", exponent_flattens_neighbor_effect},
        {"k-means matches exhaustive partition minimum", kmeans_oracle},
        {"elbow recovers G=3", elbow_recovers_three},
        {"multi-level clustering converges", mlc_converges},
        {"LSTM BPTT gradient check", lstm_gradient_check},
        {"LSTM learns the diurnal sine", lstm_learns_sine},
        {"experiment CSVs are byte-deterministic", cli_determinism},
        {"data-pipeline micro-fixtures", data_pipeline_fixtures},
    };
    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1 < 10 ? "0" : "") << i + 1 << "] "
                  << criteria[i].first << " :: " << o.detail << " (" << num(secs, 3) << " s)" << std::endl;
    }
    std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
