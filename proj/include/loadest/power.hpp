#pragma once

#include <span>
#include <string>
#include <vector>

namespace loadest::power {

enum class BsRole { HapsSmbs, Mbs, Sbs };

std::string to_string(BsRole role);
BsRole role_from_string(const std::string& name);

// EARTH coefficients of one base station.
struct BsPowerProfile {
    double p_operational = 0.0;  // W
    double amp_efficiency = 1.0;
    double p_transmit = 0.0;     // W
    double p_sleep = 0.0;        // W
    BsRole role = BsRole::Sbs;

    void validate() const;
};

// Stock coefficients shipped with the tool; none come from measurements.
// HAPS defaults to the macro values.
BsPowerProfile default_profile(BsRole role);

// Sleep power at zero load, otherwise P_o + eta * load * P_t (load = 1 included).
double bs_power(const BsPowerProfile& profile, double load);

struct SbsLoad {
    BsPowerProfile profile;
    double load = 0.0;
};

struct NetworkPower {
    double haps = 0.0;
    double mbs = 0.0;
    std::vector<double> sbs;
    double total = 0.0;
};

// HAPS and macro stations never sleep, so their loads must be strictly positive.
NetworkPower network_power(const BsPowerProfile& haps, double haps_load, const BsPowerProfile& mbs, double mbs_load,
                           std::span<const SbsLoad> sbs);

} // namespace loadest::power
