#pragma once

#include "loadest/traffic_data.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace loadest::lstm {

using data::WindowSample;

enum class Gate : std::size_t { Forget = 0, Input = 1, Candidate = 2, Output = 3 };

// One LSTM layer plus a linear output unit, stored as a single flat vector:
// [W_f, W_i, W_c, W_o, b_f, b_i, b_c, b_o, W_y, b_y]. Each W_g is H x (H + D)
// row-major and multiplies the concatenation [h_{t-1}, x_t].
struct LstmParams {
    std::size_t hidden = 0;
    std::size_t input_dim = 1;
    std::vector<double> values;

    static LstmParams zeros(std::size_t hidden, std::size_t input_dim = 1);
    // Uniform in [-scale, scale].
    static LstmParams uniform(std::size_t hidden, std::size_t input_dim, double scale, std::uint64_t seed);

    static std::size_t count(std::size_t hidden, std::size_t input_dim);

    std::size_t concat_dim() const { return hidden + input_dim; }
    std::span<double> weights(Gate g);
    std::span<const double> weights(Gate g) const;
    std::span<double> bias(Gate g);
    std::span<const double> bias(Gate g) const;
    std::span<double> head_weights();
    std::span<const double> head_weights() const;
    double& head_bias() { return values.back(); }
    double head_bias() const { return values.back(); }
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    static LstmState zeros(std::size_t hidden);
};

struct GateActivations {
    std::vector<double> forget;
    std::vector<double> input;
    std::vector<double> candidate;
    std::vector<double> output;
};

struct CellStep {
    LstmState state;
    GateActivations gates;
};

double sigmoid(double z);

CellStep lstm_cell_forward(const LstmParams& p, std::span<const double> x, const LstmState& prev);

// Runs the cell over a window of scalar loads from a zero state; returns W_y h_T + b_y.
double forward_sequence(const LstmParams& p, std::span<const double> window);

// forward_sequence clamped to [0, 1].
double predict(const LstmParams& p, std::span<const double> window);

double loss_mae(std::span<const double> predictions, std::span<const double> targets);

struct BatchGradient {
    LstmParams grad;  // same layout as the parameters
    double loss = 0.0;
};

// Exact gradient of the batch-mean absolute error by backpropagation through time.
// The subgradient of |r| at r = 0 is taken as 0.
BatchGradient backward_bptt(const LstmParams& p, std::span<const WindowSample> batch);

struct TrainConfig {
    std::size_t hidden = 10;
    double learning_rate = 0.001;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double init_scale = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    LstmParams params;
    // Training-set MAE before the first update, then after every epoch.
    std::vector<double> loss_history;
};

// Adam on mini-batches of MAE, reshuffling the samples every epoch.
TrainResult train(std::span<const WindowSample> samples, const TrainConfig& cfg);

double mean_abs_error(const LstmParams& p, std::span<const WindowSample> samples);

// {"hidden":H,"input_dim":D,"window_size":W,"params":[...]}
std::string to_json(const LstmParams& p, std::size_t window_size);
LstmParams from_json(const std::string& text, std::size_t* window_size = nullptr);

} // namespace loadest::lstm
