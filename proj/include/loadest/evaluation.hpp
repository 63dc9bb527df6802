#pragma once

#include "loadest/clustering.hpp"
#include "loadest/lstm.hpp"
#include "loadest/traffic_data.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace loadest::eval {

inline constexpr double kMapeFloor = 1e-6;

// Mean absolute percentage error in percent; actual values below kMapeFloor are
// replaced by the floor in the denominator.
double mape(std::span<const double> actual, std::span<const double> predicted);

struct EstimationError {
    std::vector<double> trial_mape;  // percent, one entry per trial
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single trial

    std::size_t trials() const { return trial_mape.size(); }
    static EstimationError from_trials(std::vector<double> trial_mape);
};

struct ResultRow {
    std::string experiment;
    std::string estimator;
    double param1 = 0.0;
    double param2 = 0.0;
    EstimationError error;
};

enum class SpatialEstimator { Mean, Idw, Random, RandomIdw };

std::string to_string(SpatialEstimator e);
SpatialEstimator spatial_estimator_from_string(const std::string& name);

// Rows: param1 = exponent n (0 for unweighted estimators), param2 = neighbor count N.
struct SpatialExperimentConfig {
    std::string experiment = "fig2";
    std::vector<SpatialEstimator> estimators = {SpatialEstimator::Idw};
    std::vector<double> exponents = {1.0, 3.0, 5.0, 10.0};
    std::vector<std::size_t> neighbor_counts = {10, 50, 100, 150, 200};
    std::size_t iterations = 300;
    std::size_t sleeping_per_iteration = 1;
    std::uint64_t seed = 0;
};

// Rows: param1 = layer count L, param2 = cluster count G.
struct MlcExperimentConfig {
    std::string experiment = "fig3";
    cluster::MlcConfig mlc;
    std::vector<std::size_t> layers = {1, 2, 3, 4, 5, 6, 7};
    std::size_t iterations = 300;
    std::size_t sleeping_per_iteration = 1;
    // The day is tiled into blocks of this many slots; each block is hidden and
    // estimated in one MLC run, so every slot of the profile gets scored.
    std::size_t hidden_block = 12;
    std::uint64_t seed = 0;
};

// Rows: param1 = window size, param2 = hidden units.
struct TemporalExperimentConfig {
    std::string experiment = "fig7";
    std::vector<std::size_t> windows = {4, 8, 12};
    std::vector<std::size_t> units = {5, 10, 20};
    lstm::TrainConfig train;
    std::size_t cells = 1;
    double zscore_threshold = 2.5;
    double train_fraction = 0.6;
    std::uint64_t seed = 0;
};

// Each iteration draws sleeping cells, withholds their day profiles and scores
// every estimator configuration over all profile slots. One trial per iteration.
std::vector<ResultRow> run_spatial_experiment(const data::TrafficGrid& grid, const SpatialExperimentConfig& cfg);

std::vector<ResultRow> run_mlc_experiment(const data::TrafficGrid& grid, const MlcExperimentConfig& cfg);

// Per (window, units): z-score filter, windowing, seeded 60/40 split, training,
// test-set MAPE. One trial per selected cell.
std::vector<ResultRow> run_temporal_experiment(const data::TrafficGrid& grid, const TemporalExperimentConfig& cfg);

// Scores one series: returns the test MAPE and optionally the trained model.
double temporal_test_mape(const data::TrafficSeries& series, std::size_t window, const lstm::TrainConfig& train,
                          double zscore_threshold, double train_fraction, std::uint64_t split_seed,
                          lstm::LstmParams* model = nullptr);

// experiment,estimator,param1,param2,mean_mape,std_mape,trials
void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);

// Plot-ready long format per figure: fig2 -> n,N,mean_mape,std_mape;
// fig3 -> method,x,mean_mape,std_mape; fig7 -> window,units,mape.
void write_figure_csv(std::ostream& out, const std::string& figure, std::span<const ResultRow> rows);

} // namespace loadest::eval
