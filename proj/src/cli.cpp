#include "loadest/cli.hpp"

#include "loadest/clustering.hpp"
#include "loadest/config.hpp"
#include "loadest/evaluation.hpp"
#include "loadest/lstm.hpp"
#include "loadest/power.hpp"
#include "loadest/random.hpp"
#include "loadest/spatial.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace loadest::cli {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

struct EstimateOptions {
    std::string method;
    std::vector<std::uint32_t> targets;
    std::size_t slot = 0;
    double exponent = 5.0;
    std::size_t neighbors = 50;
    std::size_t layers = 7;
    std::size_t clusters = 3;
    std::size_t sleep_duration = 1;
    std::size_t window = 12;
    std::size_t units = 10;
    std::size_t epochs = 50;
};

struct PowerOptions {
    std::string loads_path;
    bool write_csv = false;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

CliConfig resolve_config(const GlobalOptions& g) {
    CliConfig cfg = g.config_path.empty() ? default_config() : load_config(g.config_path);
    if (g.seed) {
        apply_seed(cfg, *g.seed);
    }
    if (!g.out_dir.empty()) {
        cfg.output_dir = g.out_dir;
    }
    return cfg;
}

fs::path prepare_output(const CliConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    return f;
}

int cmd_synth(const CliConfig& cfg, std::ostream& out) {
    const auto grid = load_grid(cfg.data);
    const auto path = prepare_output(cfg) / "synthetic.csv";
    auto f = open_output(path);
    data::write_load_csv(f, grid);
    out << "wrote " << grid.size() * grid.series_length() << " rows for " << grid.size() << " cells to "
        << path.string() << '\n';
    return kExitOk;
}

int cmd_ingest_check(const CliConfig& cfg, const std::string& input, std::ostream& out) {
    auto options = cfg.data.ingest;
    const std::string path = input.empty() ? cfg.data.csv_path : input;
    if (path.empty()) {
        throw std::invalid_argument("ingest-check needs --input or a csv data source");
    }
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    const auto grid = data::ingest_cdr(in, options);
    double max_load = 0.0;
    for (const auto& c : grid.cells()) {
        for (double v : c.series.values) {
            max_load = std::max(max_load, v);
        }
    }
    out << "cells: " << grid.size() << '\n'
        << "grid side: " << grid.geometry().side << '\n'
        << "slots: " << grid.series_length() << '\n'
        << "days: " << grid.num_days() << '\n'
        << "max raw load: " << fmt(max_load) << '\n';
    return kExitOk;
}

std::vector<double> lstm_history(const data::TrafficSeries& series, std::size_t eval_index) {
    return {series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(eval_index)};
}

int cmd_estimate(const CliConfig& cfg, const EstimateOptions& opt, std::ostream& out) {
    const auto grid = load_grid(cfg.data);
    std::vector<data::CellId> targets;
    for (auto t : opt.targets) {
        const data::CellId id{t};
        if (!grid.index_of(id)) {
            throw std::invalid_argument("unknown target cell " + std::to_string(t));
        }
        targets.push_back(id);
    }
    const std::size_t spd = grid.slots_per_day();
    if (opt.slot >= spd) {
        throw std::invalid_argument("slot must lie in [0, " + std::to_string(spd) + ")");
    }

    std::map<data::CellId, double> estimates;
    std::map<data::CellId, double> actuals;
    const auto dir = prepare_output(cfg);

    if (opt.method == "lstm") {
        const std::size_t eval_index = (grid.num_days() - 1) * spd + opt.slot;
        if (eval_index < 2 * (opt.window + 1)) {
            throw std::invalid_argument("not enough history before the evaluation slot");
        }
        lstm::TrainConfig train = cfg.experiment.fig7.train;
        train.hidden = opt.units;
        train.epochs = opt.epochs;
        for (const auto& id : targets) {
            const auto& series = grid.at(id).series;
            data::TrafficSeries history = series;
            history.values = lstm_history(series, eval_index);
            const auto filtered = data::remove_outliers_zscore(history, cfg.experiment.fig7.zscore_threshold);
            const auto samples = data::make_windows(filtered, opt.window);
            train.seed = derive_seed(cfg.seed, {id.value, 0x1a});
            const auto model = lstm::train(samples, train);
            const std::span<const double> window(series.values.data() + eval_index - opt.window, opt.window);
            estimates[id] = lstm::predict(model.params, window);
            actuals[id] = series.values[eval_index];
        }
    } else if (opt.method == "mlc") {
        cluster::MlcConfig mlc;
        mlc.layers = opt.layers;
        mlc.clusters = opt.clusters == 0 ? std::nullopt : std::optional<std::size_t>(opt.clusters);
        mlc.sleep_duration = opt.sleep_duration;
        mlc.seed = derive_seed(cfg.seed, {0x31c});
        const auto profiles = data::day_profile_grid(grid);
        std::vector<std::size_t> hidden;
        for (std::size_t k = 0; k < mlc.sleep_duration; ++k) {
            hidden.push_back((opt.slot + spd - k) % spd);
        }
        const auto trace = cluster::mlc_run(profiles, targets, hidden, mlc);
        for (std::size_t s = 0; s < targets.size(); ++s) {
            estimates[targets[s]] = trace.layers.back().estimates[s][0];
            actuals[targets[s]] = profiles.at(targets[s]).series.values[opt.slot];
        }
        for (const auto& w : trace.warnings) {
            out << "warning: " << w << '\n';
        }
        auto f = open_output(dir / "mlc_trace.csv");
        cluster::write_mlc_trace_csv(f, trace);
    } else {
        const auto profiles = data::day_profile_grid(grid);
        const spatial::WeightingConfig wc{opt.exponent};
        for (const auto& id : targets) {
            std::vector<spatial::Candidate> picked;
            if (opt.method == "mean" || opt.method == "idw") {
                picked = spatial::nearest_candidates(profiles, id, opt.neighbors, targets);
            } else {
                picked = spatial::random_candidates(profiles, id, opt.neighbors, derive_seed(cfg.seed, {id.value}),
                                                    targets);
            }
            const auto ns = spatial::make_neighbor_set(profiles, id, picked, opt.slot);
            const bool weighted = opt.method == "idw" || opt.method == "random-idw";
            estimates[id] = weighted ? spatial::estimate_distance_weighted(ns, wc) : spatial::estimate_unweighted_mean(ns);
            actuals[id] = profiles.at(id).series.values[opt.slot];
        }
    }

    auto f = open_output(dir / "estimates.csv");
    f << "cell_id,method,slot,estimate,actual,ape\n";
    std::vector<double> actual;
    std::vector<double> predicted;
    for (const auto& id : targets) {
        const double a = actuals.at(id);
        const double e = estimates.at(id);
        const double ape = eval::mape(std::vector<double>{a}, std::vector<double>{e});
        f << id.value << ',' << opt.method << ',' << opt.slot << ',' << fmt(e) << ',' << fmt(a) << ',' << fmt(ape)
          << '\n';
        out << "cell " << id.value << ": estimate " << fmt(e) << ", actual " << fmt(a) << ", APE " << fmt(ape)
            << "%\n";
        actual.push_back(a);
        predicted.push_back(e);
    }
    out << "MAPE: " << fmt(eval::mape(actual, predicted)) << "%\n";
    return kExitOk;
}

int cmd_experiment(const CliConfig& cfg, const std::string& figure, std::ostream& out) {
    const auto grid = load_grid(cfg.data);
    std::vector<eval::ResultRow> rows;
    if (figure == "fig2") {
        rows = eval::run_spatial_experiment(grid, cfg.experiment.fig2);
    } else if (figure == "fig3") {
        rows = eval::run_mlc_experiment(grid, cfg.experiment.fig3_mlc);
        const auto spatial_rows = eval::run_spatial_experiment(grid, cfg.experiment.fig3_spatial);
        rows.insert(rows.end(), spatial_rows.begin(), spatial_rows.end());
    } else {
        rows = eval::run_temporal_experiment(grid, cfg.experiment.fig7);
    }
    const auto dir = prepare_output(cfg);
    {
        auto f = open_output(dir / ("results_" + figure + ".csv"));
        eval::write_results_csv(f, rows);
    }
    {
        auto f = open_output(dir / (figure + ".csv"));
        eval::write_figure_csv(f, figure, rows);
    }
    eval::write_results_csv(out, rows);
    return kExitOk;
}

int cmd_power(const CliConfig& cfg, const PowerOptions& opt, std::ostream& out) {
    std::ifstream in(opt.loads_path);
    if (!in) {
        throw std::runtime_error("cannot open loads file '" + opt.loads_path + "'");
    }
    std::string line;
    std::size_t line_no = 0;
    std::optional<double> haps;
    std::optional<double> mbs;
    std::vector<power::SbsLoad> sbs;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || (line_no == 1 && line.rfind("role", 0) == 0)) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("loads line " + std::to_string(line_no) + ": expected role,load");
        }
        const auto role = power::role_from_string(line.substr(0, comma));
        double load = 0.0;
        try {
            std::size_t used = 0;
            const auto text = line.substr(comma + 1);
            load = std::stod(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("loads line " + std::to_string(line_no) + ": invalid load");
        }
        switch (role) {
        case power::BsRole::HapsSmbs:
            if (haps) {
                throw std::invalid_argument("loads file lists more than one HAPS");
            }
            haps = load;
            break;
        case power::BsRole::Mbs:
            if (mbs) {
                throw std::invalid_argument("loads file lists more than one MBS");
            }
            mbs = load;
            break;
        case power::BsRole::Sbs:
            sbs.push_back({cfg.power.sbs, load});
            break;
        }
    }
    if (!haps || !mbs) {
        throw std::invalid_argument("loads file must give one haps and one mbs load");
    }
    const auto np = power::network_power(cfg.power.haps, *haps, cfg.power.mbs, *mbs, sbs);

    std::ostringstream table;
    table << "role,index,load,watts\n";
    table << "haps,0," << fmt(*haps) << ',' << fmt(np.haps) << '\n';
    table << "mbs,0," << fmt(*mbs) << ',' << fmt(np.mbs) << '\n';
    double sbs_total = 0.0;
    for (std::size_t k = 0; k < sbs.size(); ++k) {
        table << "sbs," << k << ',' << fmt(sbs[k].load) << ',' << fmt(np.sbs[k]) << '\n';
        sbs_total += np.sbs[k];
    }
    table << "sbs_total,," << ',' << fmt(sbs_total) << '\n';
    table << "total,,," << fmt(np.total) << '\n';
    out << table.str();
    if (opt.write_csv) {
        auto f = open_output(prepare_output(cfg) / "power.csv");
        f << table.str();
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Traffic load estimation for sleeping small base stations", "loadest"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    app.add_option("--config", global.config_path, "JSON configuration file");
    app.add_option("--seed", global.seed, "Global RNG seed (overrides the config)");
    app.add_option("--out", global.out_dir, "Output directory (overrides the config)");

    auto* synth = app.add_subcommand("synth", "Write the configured synthetic grid as CSV");

    std::string ingest_input;
    auto* ingest = app.add_subcommand("ingest-check", "Validate and summarize a CDR CSV file");
    ingest->add_option("--input", ingest_input, "CSV file (defaults to the config's csv source)");

    EstimateOptions est;
    auto* estimate = app.add_subcommand("estimate", "Estimate sleeping-cell loads at one slot");
    estimate->add_option("--method", est.method, "mean|idw|random|random-idw|mlc|lstm")
        ->required()
        ->check(CLI::IsMember({"mean", "idw", "random", "random-idw", "mlc", "lstm"}));
    estimate->add_option("--targets", est.targets, "Sleeping cell ids")->required()->delimiter(',');
    estimate->add_option("--slot", est.slot, "Slot of the day to estimate");
    estimate->add_option("-n,--exponent", est.exponent, "Distance exponent for weighted methods");
    estimate->add_option("-N,--neighbors", est.neighbors, "Neighbor count for spatial methods");
    estimate->add_option("--layers", est.layers, "MLC layers");
    estimate->add_option("--clusters", est.clusters, "MLC cluster count (0 selects it by the elbow method)");
    estimate->add_option("--sleep-duration", est.sleep_duration, "MLC: slots the targets have been asleep");
    estimate->add_option("--window", est.window, "LSTM window size");
    estimate->add_option("--units", est.units, "LSTM hidden units");
    estimate->add_option("--epochs", est.epochs, "LSTM training epochs");

    std::string figure;
    auto* experiment = app.add_subcommand("experiment", "Run a figure sweep and write its CSV");
    experiment->add_option("figure", figure, "fig2|fig3|fig7")->required()->check(CLI::IsMember({"fig2", "fig3", "fig7"}));

    PowerOptions pw;
    auto* power_cmd = app.add_subcommand("power", "Network power for a set of loads");
    power_cmd->add_option("--loads", pw.loads_path, "CSV with role,load rows")->required();
    power_cmd->add_flag("--csv", pw.write_csv, "Also write power.csv to the output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        const auto cfg = resolve_config(global);
        if (*synth) {
            return cmd_synth(cfg, out);
        }
        if (*ingest) {
            return cmd_ingest_check(cfg, ingest_input, out);
        }
        if (*estimate) {
            return cmd_estimate(cfg, est, out);
        }
        if (*experiment) {
            return cmd_experiment(cfg, figure, out);
        }
        if (*power_cmd) {
            return cmd_power(cfg, pw, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    }
    return kExitUsage;
}

} // namespace loadest::cli
