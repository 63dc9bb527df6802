#pragma once

#include "loadest/traffic_data.hpp"

#include <cstdint>
#include <vector>

namespace loadest::data {

// Ground-truth traffic whose spatial correlation decays with distance.
//
// For a cell c, day d and slot t (w_k = 2*pi*k / slots_per_day):
//
//   load = clip01( base_c(t) * exp(field_std * local_c(t)) + noise_std * e )
//   base_c(t)  = exp(region_level_std * R1_c)
//              * (base_level + sum_k A_k sin(w_k t + phi_k + region_phase_spread * R0_c))
//   local_c(t) = (Z0_c + sum_k Z(2k-1)_c cos(w_k t) + Z(2k)_c sin(w_k t)) / sqrt(2K + 1)
//
// Z are unit-variance Gaussian fields with covariance exp(-d / spatial_corr_length);
// R are smooth regional fields with covariance exp(-(d / (region_scale * L))^2), so
// the diurnal base is shared regionally; e is i.i.d. standard normal noise. The
// spatial pattern repeats every day, only the noise differs between days.
struct SyntheticConfig {
    std::size_t grid_side = 20;
    double cell_size = kDefaultCellSize;
    std::size_t num_days = 7;
    std::size_t slots_per_day = kDefaultSlotsPerDay;
    double spatial_corr_length = 2.0 * kDefaultCellSize;  // meters
    std::vector<double> diurnal_amplitudes = {0.15, 0.05};
    double noise_std = 0.05;
    std::uint64_t seed = 0;

    double base_level = 0.35;
    double field_std = 0.2;
    double region_scale = 3.0;  // multiple of spatial_corr_length
    double region_phase_spread = 1.0;  // radians per unit regional field
    double region_level_std = 0.25;

    void validate() const;
};

// Largest grid the dense covariance factorization accepts.
inline constexpr std::size_t kMaxSyntheticCells = 4096;

TrafficGrid generate_synthetic(const SyntheticConfig& config);

// Cells drawn from a fixed number of diurnal archetypes, used for clustering.
// Archetype g is 0.5 + 0.3 sin(w t + 2 pi g / clusters); each cell follows its
// archetype scaled by exp(scale_spread * z_c) plus i.i.d. noise.
struct ClusteredConfig {
    std::size_t grid_side = 20;
    double cell_size = kDefaultCellSize;
    std::size_t num_days = 7;
    std::size_t slots_per_day = kDefaultSlotsPerDay;
    std::size_t clusters = 3;
    double noise_std = 0.0;
    double scale_spread = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ClusteredGrid {
    TrafficGrid grid;
    std::vector<std::size_t> archetype;  // per cell index
};

ClusteredGrid generate_clustered(const ClusteredConfig& config);

// offset + amplitude * sin(2 pi t / period), sampled for num_days * slots_per_day slots.
TrafficSeries sine_series(std::size_t num_days, std::size_t slots_per_day = kDefaultSlotsPerDay,
                          double amplitude = 0.4, double offset = 0.5, double period = 144.0);

} // namespace loadest::data
