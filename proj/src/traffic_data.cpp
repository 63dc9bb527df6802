#include "loadest/traffic_data.hpp"

#include "loadest/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace loadest::data {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) {
        return std::nullopt;
    }
    return v;
}

std::optional<double> parse_real(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

} // namespace

double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Position GridGeometry::center_of(std::size_t index) const {
    if (side == 0) {
        throw std::invalid_argument("grid geometry has zero side");
    }
    const auto col = static_cast<double>(index % side);
    const auto row = static_cast<double>(index / side);
    return {(col + 0.5) * cell_size, (row + 0.5) * cell_size};
}

TrafficGrid::TrafficGrid(std::vector<CellRecord> cells, GridGeometry geometry)
    : cells_(std::move(cells)), geometry_(geometry) {
    std::sort(cells_.begin(), cells_.end(),
              [](const CellRecord& a, const CellRecord& b) { return a.id < b.id; });
    index_.reserve(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& c = cells_[i];
        if (!index_.emplace(c.id.value, i).second) {
            throw std::invalid_argument("duplicate cell id " + std::to_string(c.id.value));
        }
        if (!std::isfinite(c.position.x) || !std::isfinite(c.position.y)) {
            throw std::invalid_argument("non-finite position for cell " + std::to_string(c.id.value));
        }
        if (c.series.values.size() != cells_.front().series.values.size()) {
            throw std::invalid_argument("series lengths differ across cells");
        }
    }
}

std::optional<std::size_t> TrafficGrid::index_of(CellId id) const {
    const auto it = index_.find(id.value);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const CellRecord& TrafficGrid::at(CellId id) const {
    const auto idx = index_of(id);
    if (!idx) {
        throw std::out_of_range("unknown cell id " + std::to_string(id.value));
    }
    return cells_[*idx];
}

IngestError::IngestError(std::size_t line, const std::string& what)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

double aggregate_activities(double calls, double texts, double internet) {
    if (calls < 0.0 || texts < 0.0 || internet < 0.0) {
        throw std::invalid_argument("activity counts must be non-negative");
    }
    return calls + texts + internet;
}

TrafficGrid ingest_cdr(std::istream& in, const IngestOptions& options) {
    if (options.slots_per_day == 0) {
        throw std::invalid_argument("slots_per_day must be positive");
    }
    const auto& schema = options.schema;

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) {
        throw IngestError(0, "empty input");
    }

    const auto header = split_fields(line);
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    const auto cell_col = column(schema.cell_column);
    const auto slot_col = column(schema.slot_column);
    if (!cell_col || !slot_col) {
        throw IngestError(line_no, "header must name '" + schema.cell_column + "' and '" + schema.slot_column + "'");
    }
    std::vector<std::size_t> activity_cols;
    for (const auto& name : schema.activity_columns) {
        if (auto c = column(name)) {
            activity_cols.push_back(*c);
        }
    }
    const auto load_col = column(schema.load_column);
    const bool activity_mode = !activity_cols.empty() && activity_cols.size() == schema.activity_columns.size();
    if (!activity_mode && !load_col) {
        throw IngestError(line_no, "header must carry the activity columns or '" + schema.load_column + "'");
    }

    // (cell, slot) -> raw load
    std::map<std::pair<std::uint32_t, std::uint64_t>, double> readings;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw IngestError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                           std::to_string(fields.size()));
        }
        const auto cell = parse_unsigned(fields[*cell_col]);
        if (!cell || *cell > std::numeric_limits<std::uint32_t>::max()) {
            throw IngestError(line_no, "invalid cell id '" + std::string(fields[*cell_col]) + "'");
        }
        const auto slot = parse_unsigned(fields[*slot_col]);
        if (!slot) {
            throw IngestError(line_no, "invalid slot '" + std::string(fields[*slot_col]) + "'");
        }
        if (*cell < options.id_base) {
            throw IngestError(line_no, "cell id below id_base");
        }

        const auto key = std::make_pair(static_cast<std::uint32_t>(*cell), *slot);
        if (activity_mode) {
            double sum = 0.0;
            for (auto c : activity_cols) {
                // Blank activity fields mean no recorded activity of that kind.
                if (fields[c].empty()) {
                    continue;
                }
                const auto v = parse_real(fields[c]);
                if (!v) {
                    throw IngestError(line_no, "non-numeric activity '" + std::string(fields[c]) + "'");
                }
                if (*v < 0.0) {
                    throw IngestError(line_no, "negative activity '" + std::string(fields[c]) + "'");
                }
                sum += *v;
            }
            readings[key] += sum;
        } else {
            const auto v = parse_real(fields[*load_col]);
            if (!v) {
                throw IngestError(line_no, "non-numeric load '" + std::string(fields[*load_col]) + "'");
            }
            if (*v < 0.0) {
                throw IngestError(line_no, "negative load '" + std::string(fields[*load_col]) + "'");
            }
            auto [it, inserted] = readings.emplace(key, *v);
            if (!inserted && it->second != *v) {
                throw IngestError(line_no, "conflicting duplicate reading for cell " + std::to_string(key.first) +
                                               " slot " + std::to_string(key.second));
            }
        }
        ++rows;
    }
    if (rows == 0) {
        throw IngestError(0, "empty input: no data rows");
    }

    std::uint64_t max_slot = 0;
    std::uint32_t max_index = 0;
    for (const auto& [key, v] : readings) {
        max_slot = std::max(max_slot, key.second);
        max_index = std::max(max_index, key.first - options.id_base);
    }
    const std::size_t spd = options.slots_per_day;
    const std::size_t length = (static_cast<std::size_t>(max_slot) / spd + 1) * spd;

    GridGeometry geometry{options.grid_side, options.cell_size};
    if (geometry.side == 0) {
        geometry.side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(max_index) + 1.0)));
        while (geometry.side * geometry.side < static_cast<std::size_t>(max_index) + 1) {
            ++geometry.side;
        }
    } else if (static_cast<std::size_t>(max_index) >= geometry.side * geometry.side) {
        throw IngestError(0, "cell id " + std::to_string(max_index + options.id_base) +
                                 " lies outside the declared grid");
    }

    std::vector<CellRecord> cells;
    for (const auto& [key, v] : readings) {
        if (cells.empty() || cells.back().id.value != key.first) {
            CellRecord rec;
            rec.id = CellId{key.first};
            rec.position = geometry.center_of(key.first - options.id_base);
            rec.series.values.assign(length, 0.0);
            rec.series.slots_per_day = spd;
            rec.series.slot_minutes = options.slot_minutes;
            cells.push_back(std::move(rec));
        }
        cells.back().series.values[key.second] = v;
    }
    return TrafficGrid(std::move(cells), geometry);
}

TrafficGrid normalize_loads(const TrafficGrid& grid) {
    double max_load = 0.0;
    for (const auto& c : grid.cells()) {
        for (double v : c.series.values) {
            max_load = std::max(max_load, v);
        }
    }
    if (!(max_load > 0.0)) {
        throw std::invalid_argument("cannot normalize an all-zero dataset");
    }
    std::vector<CellRecord> cells = grid.cells();
    for (auto& c : cells) {
        for (double& v : c.series.values) {
            v /= max_load;
        }
    }
    return TrafficGrid(std::move(cells), grid.geometry());
}

DayProfile average_day_profile(const TrafficSeries& series) {
    const std::size_t spd = series.slots_per_day;
    if (spd == 0 || series.values.empty() || series.values.size() % spd != 0) {
        throw std::invalid_argument("series length " + std::to_string(series.values.size()) +
                                    " is not a whole number of days");
    }
    const std::size_t days = series.values.size() / spd;
    DayProfile profile{std::vector<double>(spd, 0.0)};
    for (std::size_t d = 0; d < days; ++d) {
        for (std::size_t t = 0; t < spd; ++t) {
            profile.values[t] += series.values[d * spd + t];
        }
    }
    for (double& v : profile.values) {
        v /= static_cast<double>(days);
    }
    return profile;
}

TrafficGrid day_profile_grid(const TrafficGrid& grid) {
    std::vector<CellRecord> cells = grid.cells();
    for (auto& c : cells) {
        c.series.values = average_day_profile(c.series).values;
    }
    return TrafficGrid(std::move(cells), grid.geometry());
}

TrafficSeries remove_outliers_zscore(const TrafficSeries& series, double threshold) {
    if (series.values.size() < 2) {
        throw std::invalid_argument("z-score filtering needs at least 2 values");
    }
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("z-score threshold must be positive");
    }
    const auto n = static_cast<double>(series.values.size());
    const double mean = std::accumulate(series.values.begin(), series.values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : series.values) {
        var += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(var / n);
    // A constant series only shows rounding-level spread; nothing is an outlier.
    const double scale = std::abs(*std::max_element(series.values.begin(), series.values.end(),
                                                    [](double a, double b) { return std::abs(a) < std::abs(b); }));
    if (sd <= 1e-12 * scale || sd == 0.0) {
        return series;
    }
    TrafficSeries out = series;
    out.values.clear();
    for (double v : series.values) {
        if (std::abs(v - mean) / sd <= threshold) {
            out.values.push_back(v);
        }
    }
    return out;
}

std::vector<WindowSample> make_windows(std::span<const double> values, std::size_t window_size) {
    if (window_size == 0) {
        throw std::invalid_argument("window size must be at least 1");
    }
    if (values.size() <= window_size) {
        throw std::invalid_argument("series of length " + std::to_string(values.size()) +
                                    " is too short for window " + std::to_string(window_size));
    }
    std::vector<WindowSample> samples;
    samples.reserve(values.size() - window_size);
    for (std::size_t k = 0; k + window_size < values.size(); ++k) {
        samples.push_back({std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(k),
                                               values.begin() + static_cast<std::ptrdiff_t>(k + window_size)),
                           values[k + window_size]});
    }
    return samples;
}

std::vector<WindowSample> make_windows(const TrafficSeries& series, std::size_t window_size) {
    return make_windows(std::span<const double>(series.values), window_size);
}

TrainTestSplit split_train_test(std::span<const WindowSample> samples, double train_fraction,
                                std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    }
    if (samples.size() < 2) {
        throw std::invalid_argument("need at least 2 samples to split");
    }
    auto rng = make_rng(seed);
    const auto perm = random_permutation(samples.size(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(samples.size())));

    TrainTestSplit split;
    split.train.reserve(n_train);
    split.test.reserve(samples.size() - n_train);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        (i < n_train ? split.train : split.test).push_back(samples[perm[i]]);
    }
    return split;
}

void write_load_csv(std::ostream& out, const TrafficGrid& grid) {
    out << "cell_id,slot,load\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (const auto& c : grid.cells()) {
        for (std::size_t t = 0; t < c.series.values.size(); ++t) {
            row.str({});
            row << c.id.value << ',' << t << ',' << c.series.values[t] << '\n';
            out << row.str();
        }
    }
}

} // namespace loadest::data
