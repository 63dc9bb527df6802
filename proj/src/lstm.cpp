#include "loadest/lstm.hpp"

#include "loadest/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loadest::lstm {

namespace {

constexpr std::size_t kGates = 4;

std::size_t weight_block(std::size_t hidden, std::size_t input_dim) {
    return hidden * (hidden + input_dim);
}

// Everything the backward pass needs from one time step.
struct StepCache {
    std::vector<double> concat;  // [h_{t-1}, x_t]
    std::vector<double> c_prev;
    std::vector<double> f, i, g, o;
    std::vector<double> c;
    std::vector<double> tanh_c;
};

// Gate pre-activations W_g [h, x] + b_g for all four gates.
void gate_preactivations(const LstmParams& p, std::span<const double> concat, std::vector<double>& z) {
    const std::size_t H = p.hidden;
    const std::size_t K = p.concat_dim();
    z.assign(kGates * H, 0.0);
    for (std::size_t gate = 0; gate < kGates; ++gate) {
        const auto W = p.weights(static_cast<Gate>(gate));
        const auto b = p.bias(static_cast<Gate>(gate));
        for (std::size_t r = 0; r < H; ++r) {
            const double* row = &W[r * K];
            double s = b[r];
            for (std::size_t k = 0; k < K; ++k) {
                s += row[k] * concat[k];
            }
            z[gate * H + r] = s;
        }
    }
}

double run_sequence(const LstmParams& p, std::span<const double> window, std::vector<StepCache>* caches) {
    if (window.empty()) {
        throw std::invalid_argument("empty input window");
    }
    if (p.input_dim != 1) {
        throw std::invalid_argument("scalar windows need input_dim = 1");
    }
    const std::size_t H = p.hidden;
    std::vector<double> h(H, 0.0);
    std::vector<double> c(H, 0.0);
    std::vector<double> concat(H + 1);
    std::vector<double> z;
    if (caches) {
        caches->resize(window.size());
    }
    for (std::size_t t = 0; t < window.size(); ++t) {
        if (!std::isfinite(window[t])) {
            throw std::invalid_argument("non-finite input at step " + std::to_string(t));
        }
        std::copy(h.begin(), h.end(), concat.begin());
        concat[H] = window[t];
        gate_preactivations(p, concat, z);
        StepCache local;
        StepCache& sc = caches ? (*caches)[t] : local;
        sc.concat = concat;
        sc.c_prev = c;
        sc.f.resize(H);
        sc.i.resize(H);
        sc.g.resize(H);
        sc.o.resize(H);
        sc.c.resize(H);
        sc.tanh_c.resize(H);
        for (std::size_t r = 0; r < H; ++r) {
            sc.f[r] = sigmoid(z[r]);
            sc.i[r] = sigmoid(z[H + r]);
            sc.g[r] = std::tanh(z[2 * H + r]);
            sc.o[r] = sigmoid(z[3 * H + r]);
            c[r] = sc.f[r] * c[r] + sc.i[r] * sc.g[r];
            sc.c[r] = c[r];
            sc.tanh_c[r] = std::tanh(c[r]);
            h[r] = sc.o[r] * sc.tanh_c[r];
        }
    }
    const auto Wy = p.head_weights();
    double y = p.head_bias();
    for (std::size_t r = 0; r < H; ++r) {
        y += Wy[r] * h[r];
    }
    return y;
}

double sign_or_zero(double r) {
    return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
}

// Adds d(scale * |y - target|)/dparams for one sample into grad; returns |y - target|.
double accumulate_sample(const LstmParams& p, const WindowSample& sample, double scale, LstmParams& grad,
                         std::vector<StepCache>& caches) {
    const std::size_t H = p.hidden;
    const std::size_t K = p.concat_dim();
    const double y = run_sequence(p, sample.input, &caches);
    const double residual = y - sample.target;
    const double dy = scale * sign_or_zero(residual);
    if (dy == 0.0) {
        return std::abs(residual);
    }

    const auto& last = caches.back();
    auto gWy = grad.head_weights();
    const auto Wy = p.head_weights();
    std::vector<double> dh(H);
    for (std::size_t r = 0; r < H; ++r) {
        const double h_T = last.o[r] * last.tanh_c[r];
        gWy[r] += dy * h_T;
        dh[r] = dy * Wy[r];
    }
    grad.head_bias() += dy;

    std::vector<double> dc(H, 0.0);
    std::vector<double> dz(kGates * H);
    std::vector<double> dconcat(K);
    for (std::size_t t = caches.size(); t-- > 0;) {
        const auto& sc = caches[t];
        for (std::size_t r = 0; r < H; ++r) {
            dc[r] += dh[r] * sc.o[r] * (1.0 - sc.tanh_c[r] * sc.tanh_c[r]);
            const double d_o = dh[r] * sc.tanh_c[r];
            const double d_f = dc[r] * sc.c_prev[r];
            const double d_i = dc[r] * sc.g[r];
            const double d_g = dc[r] * sc.i[r];
            dz[r] = d_f * sc.f[r] * (1.0 - sc.f[r]);
            dz[H + r] = d_i * sc.i[r] * (1.0 - sc.i[r]);
            dz[2 * H + r] = d_g * (1.0 - sc.g[r] * sc.g[r]);
            dz[3 * H + r] = d_o * sc.o[r] * (1.0 - sc.o[r]);
        }
        std::fill(dconcat.begin(), dconcat.end(), 0.0);
        for (std::size_t gate = 0; gate < kGates; ++gate) {
            const auto W = p.weights(static_cast<Gate>(gate));
            auto gW = grad.weights(static_cast<Gate>(gate));
            auto gb = grad.bias(static_cast<Gate>(gate));
            for (std::size_t r = 0; r < H; ++r) {
                const double d = dz[gate * H + r];
                gb[r] += d;
                double* grow = &gW[r * K];
                const double* wrow = &W[r * K];
                for (std::size_t k = 0; k < K; ++k) {
                    grow[k] += d * sc.concat[k];
                    dconcat[k] += wrow[k] * d;
                }
            }
        }
        for (std::size_t r = 0; r < H; ++r) {
            dh[r] = dconcat[r];
            dc[r] *= sc.f[r];
        }
    }
    return std::abs(residual);
}

void check_finite(const LstmParams& grad) {
    const std::size_t H = grad.hidden;
    const std::size_t block = weight_block(H, grad.input_dim);
    for (std::size_t k = 0; k < grad.values.size(); ++k) {
        if (std::isfinite(grad.values[k])) {
            continue;
        }
        std::string where;
        static const char* names[] = {"W_f", "W_i", "W_c", "W_o", "b_f", "b_i", "b_c", "b_o"};
        if (k < kGates * block) {
            where = names[k / block];
        } else if (k < kGates * block + kGates * H) {
            where = names[kGates + (k - kGates * block) / H];
        } else if (k + 1 < grad.values.size()) {
            where = "W_y";
        } else {
            where = "b_y";
        }
        throw std::runtime_error("non-finite gradient in " + where);
    }
}

} // namespace

std::size_t LstmParams::count(std::size_t hidden, std::size_t input_dim) {
    return kGates * weight_block(hidden, input_dim) + kGates * hidden + hidden + 1;
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input_dim) {
    if (hidden == 0 || input_dim == 0) {
        throw std::invalid_argument("LSTM needs at least one hidden unit and one input");
    }
    return LstmParams{hidden, input_dim, std::vector<double>(count(hidden, input_dim), 0.0)};
}

LstmParams LstmParams::uniform(std::size_t hidden, std::size_t input_dim, double scale, std::uint64_t seed) {
    auto p = zeros(hidden, input_dim);
    auto rng = make_rng(seed);
    for (double& v : p.values) {
        v = loadest::uniform(rng, -scale, scale);
    }
    return p;
}

std::span<double> LstmParams::weights(Gate g) {
    const std::size_t block = weight_block(hidden, input_dim);
    return {values.data() + static_cast<std::size_t>(g) * block, block};
}

std::span<const double> LstmParams::weights(Gate g) const {
    const std::size_t block = weight_block(hidden, input_dim);
    return {values.data() + static_cast<std::size_t>(g) * block, block};
}

std::span<double> LstmParams::bias(Gate g) {
    const std::size_t off = kGates * weight_block(hidden, input_dim) + static_cast<std::size_t>(g) * hidden;
    return {values.data() + off, hidden};
}

std::span<const double> LstmParams::bias(Gate g) const {
    const std::size_t off = kGates * weight_block(hidden, input_dim) + static_cast<std::size_t>(g) * hidden;
    return {values.data() + off, hidden};
}

std::span<double> LstmParams::head_weights() {
    return {values.data() + kGates * weight_block(hidden, input_dim) + kGates * hidden, hidden};
}

std::span<const double> LstmParams::head_weights() const {
    return {values.data() + kGates * weight_block(hidden, input_dim) + kGates * hidden, hidden};
}

LstmState LstmState::zeros(std::size_t hidden) {
    return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

CellStep lstm_cell_forward(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
    const std::size_t H = p.hidden;
    if (x.size() != p.input_dim || prev.h.size() != H || prev.c.size() != H) {
        throw std::invalid_argument("LSTM cell shape mismatch");
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("non-finite LSTM input");
        }
    }
    std::vector<double> concat(prev.h);
    concat.insert(concat.end(), x.begin(), x.end());
    std::vector<double> z;
    gate_preactivations(p, concat, z);

    CellStep step;
    auto& gates = step.gates;
    gates.forget.resize(H);
    gates.input.resize(H);
    gates.candidate.resize(H);
    gates.output.resize(H);
    step.state = LstmState::zeros(H);
    for (std::size_t r = 0; r < H; ++r) {
        gates.forget[r] = sigmoid(z[r]);
        gates.input[r] = sigmoid(z[H + r]);
        gates.candidate[r] = std::tanh(z[2 * H + r]);
        gates.output[r] = sigmoid(z[3 * H + r]);
        step.state.c[r] = gates.forget[r] * prev.c[r] + gates.input[r] * gates.candidate[r];
        step.state.h[r] = gates.output[r] * std::tanh(step.state.c[r]);
    }
    return step;
}

double forward_sequence(const LstmParams& p, std::span<const double> window) {
    return run_sequence(p, window, nullptr);
}

double predict(const LstmParams& p, std::span<const double> window) {
    return std::clamp(forward_sequence(p, window), 0.0, 1.0);
}

double loss_mae(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("prediction and target lengths differ");
    }
    if (predictions.empty()) {
        throw std::invalid_argument("MAE of an empty set");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        s += std::abs(predictions[k] - targets[k]);
    }
    return s / static_cast<double>(predictions.size());
}

BatchGradient backward_bptt(const LstmParams& p, std::span<const WindowSample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("empty batch");
    }
    BatchGradient out{LstmParams::zeros(p.hidden, p.input_dim), 0.0};
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<StepCache> caches;
    for (const auto& sample : batch) {
        out.loss += accumulate_sample(p, sample, scale, out.grad, caches);
    }
    out.loss *= scale;
    check_finite(out.grad);
    return out;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (epochs == 0 || batch_size == 0 || hidden == 0) {
        throw std::invalid_argument("epochs, batch_size and hidden must be at least 1");
    }
    if (!(init_scale >= 0.0)) {
        throw std::invalid_argument("init_scale must be non-negative");
    }
}

double mean_abs_error(const LstmParams& p, std::span<const WindowSample> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("MAE of an empty set");
    }
    double s = 0.0;
    for (const auto& sample : samples) {
        s += std::abs(forward_sequence(p, sample.input) - sample.target);
    }
    return s / static_cast<double>(samples.size());
}

TrainResult train(std::span<const WindowSample> samples, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) {
        throw std::invalid_argument("empty training set");
    }
    TrainResult result{LstmParams::uniform(cfg.hidden, 1, cfg.init_scale, derive_seed(cfg.seed, {0})), {}};
    auto& params = result.params;
    auto rng = make_rng(derive_seed(cfg.seed, {1}));

    const std::size_t P = params.values.size();
    std::vector<double> m(P, 0.0);
    std::vector<double> v(P, 0.0);
    double beta1_t = 1.0;
    double beta2_t = 1.0;

    result.loss_history.push_back(mean_abs_error(params, samples));
    std::vector<StepCache> caches;
    auto grad = LstmParams::zeros(cfg.hidden, 1);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = random_permutation(samples.size(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.values.begin(), grad.values.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                accumulate_sample(params, samples[order[k]], scale, grad, caches);
            }
            check_finite(grad);

            beta1_t *= cfg.beta1;
            beta2_t *= cfg.beta2;
            const double correction1 = 1.0 - beta1_t;
            const double correction2 = 1.0 - beta2_t;
            for (std::size_t k = 0; k < P; ++k) {
                const double g = grad.values[k];
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
                const double m_hat = m[k] / correction1;
                const double v_hat = v[k] / correction2;
                params.values[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
            }
        }
        result.loss_history.push_back(mean_abs_error(params, samples));
    }
    return result;
}

std::string to_json(const LstmParams& p, std::size_t window_size) {
    nlohmann::json j;
    j["hidden"] = p.hidden;
    j["input_dim"] = p.input_dim;
    j["window_size"] = window_size;
    j["params"] = p.values;
    return j.dump();
}

LstmParams from_json(const std::string& text, std::size_t* window_size) {
    const auto j = nlohmann::json::parse(text);
    LstmParams p;
    p.hidden = j.at("hidden").get<std::size_t>();
    p.input_dim = j.at("input_dim").get<std::size_t>();
    p.values = j.at("params").get<std::vector<double>>();
    if (p.hidden == 0 || p.input_dim == 0 || p.values.size() != LstmParams::count(p.hidden, p.input_dim)) {
        throw std::invalid_argument("LSTM parameter vector does not match its shape header");
    }
    if (window_size) {
        *window_size = j.at("window_size").get<std::size_t>();
    }
    return p;
}

} // namespace loadest::lstm
