#include "loadest/config.hpp"

#include "loadest/random.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace loadest::cli {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& field) {
    if (j.contains(key)) {
        field = j.at(key).get<T>();
    }
}

void read_profile(const json& j, const char* key, power::BsPowerProfile& p) {
    if (!j.contains(key)) {
        return;
    }
    const auto& o = j.at(key);
    read(o, "p_operational", p.p_operational);
    read(o, "amp_efficiency", p.amp_efficiency);
    read(o, "p_transmit", p.p_transmit);
    read(o, "p_sleep", p.p_sleep);
    p.validate();
}

std::vector<eval::SpatialEstimator> read_estimators(const json& j) {
    std::vector<eval::SpatialEstimator> out;
    for (const auto& name : j.get<std::vector<std::string>>()) {
        out.push_back(eval::spatial_estimator_from_string(name));
    }
    return out;
}

} // namespace

CliConfig default_config() {
    CliConfig cfg;
    auto& fig3s = cfg.experiment.fig3_spatial;
    fig3s.experiment = "fig3";
    fig3s.estimators = {eval::SpatialEstimator::Mean, eval::SpatialEstimator::Random,
                        eval::SpatialEstimator::RandomIdw};
    fig3s.exponents = {5.0};
    apply_seed(cfg, cfg.seed);
    return cfg;
}

void apply_seed(CliConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.data.synthetic.seed = seed;
    cfg.data.clustered.seed = seed;
    cfg.experiment.fig2.seed = derive_seed(seed, {2});
    cfg.experiment.fig3_mlc.seed = derive_seed(seed, {3});
    cfg.experiment.fig3_spatial.seed = derive_seed(seed, {3, 1});
    cfg.experiment.fig7.seed = derive_seed(seed, {7});
}

CliConfig config_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    CliConfig cfg = default_config();
    read(j, "seed", cfg.seed);
    read(j, "output_dir", cfg.output_dir);

    if (j.contains("data")) {
        const auto& d = j.at("data");
        const std::string source = d.value("source", "synthetic");
        if (source == "synthetic") {
            cfg.data.kind = DataKind::Synthetic;
        } else if (source == "clustered") {
            cfg.data.kind = DataKind::Clustered;
        } else if (source == "csv") {
            cfg.data.kind = DataKind::Csv;
        } else {
            throw std::invalid_argument("data.source must be synthetic, clustered or csv");
        }
        if (d.contains("synthetic")) {
            const auto& s = d.at("synthetic");
            auto& c = cfg.data.synthetic;
            read(s, "grid_side", c.grid_side);
            read(s, "cell_size", c.cell_size);
            read(s, "num_days", c.num_days);
            read(s, "slots_per_day", c.slots_per_day);
            read(s, "spatial_corr_length", c.spatial_corr_length);
            read(s, "diurnal_amplitudes", c.diurnal_amplitudes);
            read(s, "noise_std", c.noise_std);
            read(s, "base_level", c.base_level);
            read(s, "field_std", c.field_std);
            read(s, "region_scale", c.region_scale);
            read(s, "region_phase_spread", c.region_phase_spread);
            read(s, "region_level_std", c.region_level_std);
            c.validate();
        }
        if (d.contains("clustered")) {
            const auto& s = d.at("clustered");
            auto& c = cfg.data.clustered;
            read(s, "grid_side", c.grid_side);
            read(s, "cell_size", c.cell_size);
            read(s, "num_days", c.num_days);
            read(s, "slots_per_day", c.slots_per_day);
            read(s, "clusters", c.clusters);
            read(s, "noise_std", c.noise_std);
            read(s, "scale_spread", c.scale_spread);
            c.validate();
        }
        if (d.contains("csv")) {
            const auto& s = d.at("csv");
            read(s, "path", cfg.data.csv_path);
            read(s, "grid_side", cfg.data.ingest.grid_side);
            read(s, "cell_size", cfg.data.ingest.cell_size);
            read(s, "slots_per_day", cfg.data.ingest.slots_per_day);
            read(s, "id_base", cfg.data.ingest.id_base);
        }
        if (cfg.data.kind == DataKind::Csv && cfg.data.csv_path.empty()) {
            throw std::invalid_argument("data.csv.path is required when data.source is csv");
        }
    }

    if (j.contains("power")) {
        read_profile(j.at("power"), "haps", cfg.power.haps);
        read_profile(j.at("power"), "mbs", cfg.power.mbs);
        read_profile(j.at("power"), "sbs", cfg.power.sbs);
    }

    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        auto& x = cfg.experiment;
        std::size_t iterations = x.fig2.iterations;
        std::size_t sleeping = x.fig2.sleeping_per_iteration;
        read(e, "iterations", iterations);
        read(e, "sleeping_per_iteration", sleeping);
        for (auto* s : {&x.fig2, &x.fig3_spatial}) {
            s->iterations = iterations;
            s->sleeping_per_iteration = sleeping;
        }
        x.fig3_mlc.iterations = iterations;
        x.fig3_mlc.sleeping_per_iteration = sleeping;

        if (e.contains("fig2")) {
            const auto& f = e.at("fig2");
            read(f, "exponents", x.fig2.exponents);
            read(f, "neighbors", x.fig2.neighbor_counts);
            if (f.contains("estimators")) {
                x.fig2.estimators = read_estimators(f.at("estimators"));
            }
        }
        if (e.contains("fig3")) {
            const auto& f = e.at("fig3");
            read(f, "layers", x.fig3_mlc.layers);
            read(f, "hidden_block", x.fig3_mlc.hidden_block);
            read(f, "restarts", x.fig3_mlc.mlc.restarts);
            if (f.contains("clusters")) {
                const auto& g = f.at("clusters");
                if (g.is_string() && g.get<std::string>() == "auto") {
                    x.fig3_mlc.mlc.clusters.reset();
                } else {
                    x.fig3_mlc.mlc.clusters = g.get<std::size_t>();
                }
            }
            read(f, "neighbors", x.fig3_spatial.neighbor_counts);
            if (f.contains("exponent")) {
                x.fig3_spatial.exponents = {f.at("exponent").get<double>()};
            }
            if (f.contains("estimators")) {
                x.fig3_spatial.estimators = read_estimators(f.at("estimators"));
            }
        }
        if (e.contains("fig7")) {
            const auto& f = e.at("fig7");
            read(f, "windows", x.fig7.windows);
            read(f, "units", x.fig7.units);
            read(f, "cells", x.fig7.cells);
            read(f, "zscore_threshold", x.fig7.zscore_threshold);
            read(f, "train_fraction", x.fig7.train_fraction);
        }
        if (e.contains("training")) {
            const auto& t = e.at("training");
            auto& c = x.fig7.train;
            read(t, "learning_rate", c.learning_rate);
            read(t, "epochs", c.epochs);
            read(t, "batch_size", c.batch_size);
            read(t, "init_scale", c.init_scale);
            c.validate();
        }
    }
    apply_seed(cfg, cfg.seed);
    return cfg;
}

CliConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return config_from_json_text(text.str());
}

data::TrafficGrid load_grid(const DataSource& source) {
    switch (source.kind) {
    case DataKind::Synthetic:
        return data::generate_synthetic(source.synthetic);
    case DataKind::Clustered:
        return data::generate_clustered(source.clustered).grid;
    case DataKind::Csv: {
        std::ifstream in(source.csv_path);
        if (!in) {
            throw std::runtime_error("cannot open data file '" + source.csv_path + "'");
        }
        return data::normalize_loads(data::ingest_cdr(in, source.ingest));
    }
    }
    throw std::invalid_argument("unknown data source");
}

} // namespace loadest::cli
