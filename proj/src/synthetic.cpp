#include "loadest/synthetic.hpp"

#include "loadest/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace loadest::data {

namespace {

constexpr double kNugget = 1e-6;

// Lower-triangular factor of a positive semidefinite matrix (row-major, n x n).
// Pivots that vanish to rounding zero their column.
std::vector<double> semidefinite_cholesky(std::vector<double> a, std::size_t n) {
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= l[j * n + k] * l[j * n + k];
        }
        if (d <= 1e-12 * a[j * n + j]) {
            continue;
        }
        const double pivot = std::sqrt(d);
        l[j * n + j] = pivot;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            const double* li = &l[i * n];
            const double* lj = &l[j * n];
            for (std::size_t k = 0; k < j; ++k) {
                s -= li[k] * lj[k];
            }
            l[i * n + j] = s / pivot;
        }
    }
    return l;
}

// `count` independent unit-variance fields over the positions, each a vector of
// per-cell values, with covariance kernel(distance) plus a small diagonal nugget.
std::vector<std::vector<double>> correlated_fields(const std::vector<Position>& pos,
                                                   const std::function<double(double)>& kernel,
                                                   std::size_t count, Rng& rng) {
    const std::size_t n = pos.size();
    std::vector<double> cov(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = i == j ? 1.0 + kNugget : kernel(distance(pos[i], pos[j]));
            cov[i * n + j] = k;
            cov[j * n + i] = k;
        }
    }
    const auto chol = semidefinite_cholesky(std::move(cov), n);

    std::vector<std::vector<double>> fields(count, std::vector<double>(n, 0.0));
    std::vector<double> xi(n);
    for (auto& field : fields) {
        for (auto& x : xi) {
            x = standard_normal(rng);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k <= i; ++k) {
                s += chol[i * n + k] * xi[k];
            }
            field[i] = s;
        }
    }
    return fields;
}

double clip01(double v) {
    return std::clamp(v, 0.0, 1.0);
}

} // namespace

void SyntheticConfig::validate() const {
    if (grid_side < 2) {
        throw std::invalid_argument("grid_side must be at least 2");
    }
    if (grid_side * grid_side > kMaxSyntheticCells) {
        throw std::invalid_argument("grid_side too large for the dense field sampler (max " +
                                    std::to_string(kMaxSyntheticCells) + " cells)");
    }
    if (!(cell_size > 0.0) || num_days == 0 || slots_per_day == 0) {
        throw std::invalid_argument("cell_size, num_days and slots_per_day must be positive");
    }
    if (!(spatial_corr_length > 0.0)) {
        throw std::invalid_argument("spatial_corr_length must be positive");
    }
    if (!(noise_std >= 0.0) || !(field_std >= 0.0) || !(region_level_std >= 0.0) || !(region_scale > 0.0)) {
        throw std::invalid_argument("noise_std, field_std and region_level_std must be non-negative, region_scale positive");
    }
}

TrafficGrid generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const std::size_t n = config.grid_side * config.grid_side;
    const std::size_t spd = config.slots_per_day;
    const std::size_t harmonics = config.diurnal_amplitudes.size();
    const GridGeometry geometry{config.grid_side, config.cell_size};

    std::vector<Position> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = geometry.center_of(i);
    }

    auto rng = make_rng(config.seed);
    std::vector<double> phases(harmonics);
    for (auto& p : phases) {
        p = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }

    const double corr = config.spatial_corr_length;
    const auto local = correlated_fields(pos, [corr](double d) { return std::exp(-d / corr); },
                                         2 * harmonics + 1, rng);
    const double region = config.region_scale * corr;
    const auto regional = correlated_fields(
        pos, [region](double d) { return std::exp(-(d / region) * (d / region)); }, 2, rng);

    const double local_norm = 1.0 / std::sqrt(static_cast<double>(2 * harmonics + 1));
    std::vector<CellRecord> cells(n);
    std::vector<double> pattern(spd);
    for (std::size_t c = 0; c < n; ++c) {
        const double level = std::exp(config.region_level_std * regional[1][c]);
        const double shift = config.region_phase_spread * regional[0][c];
        for (std::size_t t = 0; t < spd; ++t) {
            double base = config.base_level;
            double field = local[0][c];
            for (std::size_t k = 0; k < harmonics; ++k) {
                const double w = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * static_cast<double>(t) /
                                 static_cast<double>(spd);
                base += config.diurnal_amplitudes[k] * std::sin(w + phases[k] + shift);
                field += local[2 * k + 1][c] * std::cos(w) + local[2 * k + 2][c] * std::sin(w);
            }
            pattern[t] = level * base * std::exp(config.field_std * field * local_norm);
        }

        auto& rec = cells[c];
        rec.id = CellId{static_cast<std::uint32_t>(c)};
        rec.position = pos[c];
        rec.series.slots_per_day = spd;
        rec.series.values.resize(config.num_days * spd);
        for (std::size_t d = 0; d < config.num_days; ++d) {
            for (std::size_t t = 0; t < spd; ++t) {
                const double noise = config.noise_std > 0.0 ? config.noise_std * standard_normal(rng) : 0.0;
                rec.series.values[d * spd + t] = clip01(pattern[t] + noise);
            }
        }
    }
    return TrafficGrid(std::move(cells), geometry);
}

void ClusteredConfig::validate() const {
    if (grid_side < 2 || clusters == 0 || clusters > grid_side * grid_side) {
        throw std::invalid_argument("clustered config needs grid_side >= 2 and 1 <= clusters <= cells");
    }
    if (!(cell_size > 0.0) || num_days == 0 || slots_per_day == 0) {
        throw std::invalid_argument("cell_size, num_days and slots_per_day must be positive");
    }
    if (!(noise_std >= 0.0) || !(scale_spread >= 0.0)) {
        throw std::invalid_argument("noise_std and scale_spread must be non-negative");
    }
}

ClusteredGrid generate_clustered(const ClusteredConfig& config) {
    config.validate();
    const std::size_t n = config.grid_side * config.grid_side;
    const std::size_t spd = config.slots_per_day;
    const GridGeometry geometry{config.grid_side, config.cell_size};
    auto rng = make_rng(config.seed);

    // Balanced random assignment of cells to archetypes.
    const auto perm = random_permutation(n, rng);
    std::vector<std::size_t> archetype(n);
    for (std::size_t i = 0; i < n; ++i) {
        archetype[perm[i]] = i % config.clusters;
    }

    std::vector<CellRecord> cells(n);
    for (std::size_t c = 0; c < n; ++c) {
        const double scale = config.scale_spread > 0.0 ? std::exp(config.scale_spread * standard_normal(rng)) : 1.0;
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(archetype[c]) /
                             static_cast<double>(config.clusters);
        auto& rec = cells[c];
        rec.id = CellId{static_cast<std::uint32_t>(c)};
        rec.position = geometry.center_of(c);
        rec.series.slots_per_day = spd;
        rec.series.values.resize(config.num_days * spd);
        for (std::size_t d = 0; d < config.num_days; ++d) {
            for (std::size_t t = 0; t < spd; ++t) {
                const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(spd);
                const double clean = scale * (0.5 + 0.3 * std::sin(w + phase));
                const double noise = config.noise_std > 0.0 ? config.noise_std * standard_normal(rng) : 0.0;
                rec.series.values[d * spd + t] = clip01(clean + noise);
            }
        }
    }
    return {TrafficGrid(std::move(cells), geometry), std::move(archetype)};
}

TrafficSeries sine_series(std::size_t num_days, std::size_t slots_per_day, double amplitude, double offset,
                          double period) {
    if (num_days == 0 || slots_per_day == 0 || !(period > 0.0)) {
        throw std::invalid_argument("sine_series: num_days, slots_per_day and period must be positive");
    }
    TrafficSeries s;
    s.slots_per_day = slots_per_day;
    s.values.resize(num_days * slots_per_day);
    for (std::size_t t = 0; t < s.values.size(); ++t) {
        s.values[t] = offset + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
    }
    return s;
}

} // namespace loadest::data
