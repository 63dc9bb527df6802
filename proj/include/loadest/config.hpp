#pragma once

#include "loadest/evaluation.hpp"
#include "loadest/power.hpp"
#include "loadest/synthetic.hpp"
#include "loadest/traffic_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace loadest::cli {

enum class DataKind { Synthetic, Clustered, Csv };

struct DataSource {
    DataKind kind = DataKind::Synthetic;
    data::SyntheticConfig synthetic;
    data::ClusteredConfig clustered;
    std::string csv_path;
    data::IngestOptions ingest;
};

struct PowerProfiles {
    power::BsPowerProfile haps = power::default_profile(power::BsRole::HapsSmbs);
    power::BsPowerProfile mbs = power::default_profile(power::BsRole::Mbs);
    power::BsPowerProfile sbs = power::default_profile(power::BsRole::Sbs);
};

struct ExperimentSettings {
    eval::SpatialExperimentConfig fig2;
    eval::MlcExperimentConfig fig3_mlc;
    // Spatial comparators drawn next to MLC in the fig3 table.
    eval::SpatialExperimentConfig fig3_spatial;
    eval::TemporalExperimentConfig fig7;
};

struct CliConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    DataSource data;
    PowerProfiles power;
    ExperimentSettings experiment;
};

// Every default pre-populated; `experiment fig7` runs on synthetic data as is.
CliConfig default_config();

// Overlays the keys present in the JSON text on default_config().
CliConfig config_from_json_text(const std::string& text);
CliConfig load_config(const std::string& path);

// Applies the global seed to the data source and every experiment.
void apply_seed(CliConfig& cfg, std::uint64_t seed);

// Synthetic and clustered sources are used as generated; CSV sources are
// ingested and normalized.
data::TrafficGrid load_grid(const DataSource& source);

} // namespace loadest::cli
