#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace loadest::data {

inline constexpr std::size_t kDefaultSlotsPerDay = 144;
inline constexpr double kDefaultSlotMinutes = 10.0;
inline constexpr double kDefaultCellSize = 235.0;  // meters

struct CellId {
    std::uint32_t value = 0;
    friend auto operator<=>(const CellId&, const CellId&) = default;
};

struct Position {
    double x = 0.0;  // meters
    double y = 0.0;
};

double distance(const Position& a, const Position& b);

// A per-slot load series. Values are raw activity after ingestion and lie in
// [0, 1] once normalized.
struct TrafficSeries {
    std::vector<double> values;
    double slot_minutes = kDefaultSlotMinutes;
    std::size_t slots_per_day = kDefaultSlotsPerDay;

    std::size_t num_days() const { return slots_per_day == 0 ? 0 : values.size() / slots_per_day; }
};

struct CellRecord {
    CellId id;
    Position position;
    TrafficSeries series;
};

// Square lattice layout; cell index i sits at column i % side, row i / side.
struct GridGeometry {
    std::size_t side = 0;
    double cell_size = kDefaultCellSize;

    Position center_of(std::size_t index) const;
};

class TrafficGrid {
public:
    TrafficGrid() = default;
    // Cells are stored sorted by id; ids must be unique and series lengths equal.
    TrafficGrid(std::vector<CellRecord> cells, GridGeometry geometry);

    const std::vector<CellRecord>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    const GridGeometry& geometry() const { return geometry_; }

    std::optional<std::size_t> index_of(CellId id) const;
    const CellRecord& at(CellId id) const;
    const CellRecord& operator[](std::size_t index) const { return cells_[index]; }

    std::size_t series_length() const { return cells_.empty() ? 0 : cells_.front().series.values.size(); }
    std::size_t slots_per_day() const { return cells_.empty() ? kDefaultSlotsPerDay : cells_.front().series.slots_per_day; }
    std::size_t num_days() const { return cells_.empty() ? 0 : cells_.front().series.num_days(); }

    double load(std::size_t index, std::size_t slot) const { return cells_[index].series.values[slot]; }

private:
    std::vector<CellRecord> cells_;
    GridGeometry geometry_;
    std::unordered_map<std::uint32_t, std::size_t> index_;
};

struct DayProfile {
    std::vector<double> values;
};

struct WindowSample {
    std::vector<double> input;
    double target = 0.0;

    friend bool operator==(const WindowSample&, const WindowSample&) = default;
};

struct TrainTestSplit {
    std::vector<WindowSample> train;
    std::vector<WindowSample> test;
};

// Thrown by ingest_cdr; line is 1-based and 0 when the error is not tied to a row.
class IngestError : public std::runtime_error {
public:
    IngestError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Column names expected in the CSV header. Either all activity columns or the
// load column must be present.
struct IngestSchema {
    std::string cell_column = "cell_id";
    std::string slot_column = "slot";
    std::vector<std::string> activity_columns = {"calls", "texts", "internet"};
    std::string load_column = "load";
};

struct IngestOptions {
    IngestSchema schema;
    std::size_t grid_side = 0;  // 0 infers the smallest square holding every id
    double cell_size = kDefaultCellSize;
    std::size_t slots_per_day = kDefaultSlotsPerDay;
    double slot_minutes = kDefaultSlotMinutes;
    std::uint32_t id_base = 0;  // id of the lattice's first cell (Milan grids start at 1)
};

// Reads `cell_id,slot,calls,texts,internet` or `cell_id,slot,load` rows. Activity
// rows for the same (cell, slot) accumulate; pre-aggregated loads may repeat a
// (cell, slot) only with an identical value. Missing slots are zero-filled and the
// series is padded to whole days. The result is not normalized.
TrafficGrid ingest_cdr(std::istream& in, const IngestOptions& options = {});

double aggregate_activities(double calls, double texts, double internet);

// Divides by the global maximum over all cells and slots.
TrafficGrid normalize_loads(const TrafficGrid& grid);

DayProfile average_day_profile(const TrafficSeries& series);

// Replaces each cell's series by its day profile (one-day series).
TrafficGrid day_profile_grid(const TrafficGrid& grid);

// Drops values whose population z-score exceeds threshold.
TrafficSeries remove_outliers_zscore(const TrafficSeries& series, double threshold);

std::vector<WindowSample> make_windows(std::span<const double> values, std::size_t window_size);
std::vector<WindowSample> make_windows(const TrafficSeries& series, std::size_t window_size);

TrainTestSplit split_train_test(std::span<const WindowSample> samples, double train_fraction,
                                std::uint64_t seed);

// Writes the grid in the `cell_id,slot,load` schema, 17 significant digits.
void write_load_csv(std::ostream& out, const TrafficGrid& grid);

} // namespace loadest::data
