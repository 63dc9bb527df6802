#include "loadest/power.hpp"

#include <cmath>
#include <stdexcept>

namespace loadest::power {

std::string to_string(BsRole role) {
    switch (role) {
    case BsRole::HapsSmbs:
        return "haps";
    case BsRole::Mbs:
        return "mbs";
    case BsRole::Sbs:
        return "sbs";
    }
    return "unknown";
}

BsRole role_from_string(const std::string& name) {
    if (name == "haps" || name == "HAPS_SMBS") {
        return BsRole::HapsSmbs;
    }
    if (name == "mbs" || name == "MBS") {
        return BsRole::Mbs;
    }
    if (name == "sbs" || name == "SBS") {
        return BsRole::Sbs;
    }
    throw std::invalid_argument("unknown base-station role '" + name + "'");
}

void BsPowerProfile::validate() const {
    if (!(p_operational >= 0.0) || !(p_transmit >= 0.0) || !(p_sleep >= 0.0)) {
        throw std::invalid_argument("power coefficients must be non-negative");
    }
    if (!(amp_efficiency > 0.0)) {
        throw std::invalid_argument("amplifier efficiency must be positive");
    }
    if (p_sleep > p_operational) {
        throw std::invalid_argument("sleep power exceeds operational power");
    }
}

BsPowerProfile default_profile(BsRole role) {
    switch (role) {
    case BsRole::Sbs:
        return {56.0, 2.6, 6.3, 6.0, role};
    case BsRole::Mbs:
    case BsRole::HapsSmbs:
        return {130.0, 4.7, 20.0, 75.0, role};
    }
    throw std::invalid_argument("unknown base-station role");
}

double bs_power(const BsPowerProfile& profile, double load) {
    if (!(load >= 0.0 && load <= 1.0)) {
        throw std::invalid_argument("load must lie in [0, 1]");
    }
    if (load == 0.0) {
        return profile.p_sleep;
    }
    return profile.p_operational + profile.amp_efficiency * load * profile.p_transmit;
}

NetworkPower network_power(const BsPowerProfile& haps, double haps_load, const BsPowerProfile& mbs, double mbs_load,
                           std::span<const SbsLoad> sbs) {
    if (!(haps_load > 0.0 && haps_load <= 1.0)) {
        throw std::invalid_argument("HAPS-SMBS is always active: load must lie in (0, 1]");
    }
    if (!(mbs_load > 0.0 && mbs_load <= 1.0)) {
        throw std::invalid_argument("MBS is always active: load must lie in (0, 1]");
    }
    NetworkPower out;
    out.haps = bs_power(haps, haps_load);
    out.mbs = bs_power(mbs, mbs_load);
    out.total = out.haps + out.mbs;
    out.sbs.reserve(sbs.size());
    for (const auto& s : sbs) {
        out.sbs.push_back(bs_power(s.profile, s.load));
        out.total += out.sbs.back();
    }
    return out;
}

} // namespace loadest::power
