#include "loadest/synthetic.hpp"
#include "loadest/traffic_data.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace loadest;
using loadest::testing::ingest_text;
using loadest::testing::make_grid;

namespace {

data::IngestOptions three_slot_days() {
    data::IngestOptions o;
    o.slots_per_day = 3;
    return o;
}

} // namespace

TEST_CASE("activities aggregate by plain sum") {
    CHECK(data::aggregate_activities(0, 0, 0) == 0.0);
    CHECK(data::aggregate_activities(1, 2, 3) == 6.0);
    CHECK(data::aggregate_activities(5, 0, 0) == 5.0);
    CHECK_THROWS_AS(data::aggregate_activities(-1, 0, 0), std::invalid_argument);
}

TEST_CASE("ingest sums activities per slot") {
    const auto grid = ingest_text("cell_id,slot,calls,texts,internet\n"
                                  "0,0,1,1,2\n0,1,1,1,2\n0,2,1,1,2\n",
                                  three_slot_days());
    REQUIRE(grid.size() == 1);
    CHECK(grid[0].series.values == std::vector<double>{4, 4, 4});
}

TEST_CASE("repeated activity rows for one slot accumulate") {
    const auto grid = ingest_text("cell_id,slot,calls,texts,internet\n"
                                  "3,1,2,0,0\n3,1,0,3,\n",
                                  three_slot_days());
    CHECK(grid.at(data::CellId{3}).series.values == std::vector<double>{0, 5, 0});
}

TEST_CASE("missing slots and cells-only-in-lattice are handled") {
    const auto grid = ingest_text("cell_id,slot,load\n0,0,1\n2,4,3\n", three_slot_days());
    CHECK(grid.size() == 2);
    CHECK(grid.geometry().side == 2);
    CHECK(grid.series_length() == 6);
    CHECK(grid.at(data::CellId{0}).series.values == std::vector<double>{1, 0, 0, 0, 0, 0});
    CHECK(grid.at(data::CellId{2}).series.values == std::vector<double>{0, 0, 0, 0, 3, 0});
    CHECK(grid.at(data::CellId{2}).position.x == doctest::Approx(0.5 * data::kDefaultCellSize));
    CHECK(grid.at(data::CellId{2}).position.y == doctest::Approx(1.5 * data::kDefaultCellSize));
}

TEST_CASE("ingest errors name the offending line") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            ingest_text(text);
        } catch (const data::IngestError& e) {
            return e.line();
        }
        return 999;
    };
    CHECK(line_of("cell_id,slot,load\n0,0,0.5\n0,1,abc\n") == 3);
    CHECK(line_of("cell_id,slot,load\n0,0,0.5,9\n") == 2);
    CHECK(line_of("cell_id,slot,load\n-1,0,0.5\n") == 2);
    CHECK(line_of("cell_id,slot,load\n0,0,0.5\n0,0,0.6\n") == 3);
    CHECK(line_of("cell_id,slot,load\n0,0,-2\n") == 2);
    CHECK(line_of("id,time,value\n0,0,1\n") == 1);
    CHECK(line_of("") == 0);
    CHECK(line_of("cell_id,slot,load\n") == 0);
    CHECK_NOTHROW(ingest_text("cell_id,slot,load\n0,0,0.5\n0,0,0.5\n"));
}

TEST_CASE("declared grid side rejects ids outside the lattice") {
    data::IngestOptions o;
    o.grid_side = 2;
    CHECK_THROWS_AS(ingest_text("cell_id,slot,load\n4,0,1\n", o), data::IngestError);
    o.id_base = 1;
    CHECK_NOTHROW(ingest_text("cell_id,slot,load\n4,0,1\n", o));
}

TEST_CASE("normalization divides by the global maximum") {
    const auto raw = make_grid(2, {{2.0}, {4.0}}, 1);
    const auto norm = data::normalize_loads(raw);
    CHECK(norm[0].series.values[0] == 0.5);
    CHECK(norm[1].series.values[0] == 1.0);

    const auto unit = make_grid(2, {{0.0, 1.0}}, 2);
    CHECK(data::normalize_loads(unit)[0].series.values == std::vector<double>{0.0, 1.0});
    CHECK(data::normalize_loads(make_grid(1, {{7.0}}, 1))[0].series.values[0] == 1.0);
    CHECK_THROWS(data::normalize_loads(make_grid(1, {{0.0, 0.0}}, 2)));
}

TEST_CASE("day profile averages slots across days") {
    data::TrafficSeries s;
    s.slots_per_day = 2;
    s.values = {0.1, 0.2, 0.3, 0.4};
    const auto p = data::average_day_profile(s).values;
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-15));

    s.values = {0.1, 0.7};
    CHECK(data::average_day_profile(s).values == s.values);
    s.values.assign(6, 0.5);
    CHECK(data::average_day_profile(s).values == std::vector<double>{0.5, 0.5});

    const auto grid = data::day_profile_grid(make_grid(1, {{1, 2, 3, 5}}, 2));
    CHECK(grid[0].series.values == std::vector<double>{2, 3.5});
    CHECK(grid.num_days() == 1);
}

TEST_CASE("z-score filter drops only large deviations") {
    data::TrafficSeries s;
    s.values.assign(19, 0.1);
    s.values.push_back(0.9);
    // mean 0.14, population std sqrt(0.0304) ~ 0.17436, z(0.9) ~ 4.36
    const auto kept = data::remove_outliers_zscore(s, 2.5);
    CHECK(kept.values == std::vector<double>(19, 0.1));
    CHECK(data::remove_outliers_zscore(s, 4.4).values == s.values);
    CHECK(data::remove_outliers_zscore(s, 1e9).values == s.values);

    s.values.assign(10, 0.3);
    CHECK(data::remove_outliers_zscore(s, 0.1).values == s.values);
}

TEST_CASE("sliding windows") {
    const std::vector<double> v = {1, 2, 3, 4};
    const auto w = data::make_windows(v, 2);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == data::WindowSample{{1, 2}, 3});
    CHECK(w[1] == data::WindowSample{{2, 3}, 4});
    CHECK(data::make_windows(v, 3).size() == 1);
    CHECK_THROWS_AS(data::make_windows(v, 4), std::invalid_argument);
    CHECK_THROWS_AS(data::make_windows(v, 0), std::invalid_argument);

    std::vector<double> ramp(50);
    for (std::size_t i = 0; i < ramp.size(); ++i) {
        ramp[i] = static_cast<double>(i);
    }
    for (std::size_t win = 1; win < 50; win += 7) {
        const auto all = data::make_windows(ramp, win);
        CHECK(all.size() == ramp.size() - win);
        for (std::size_t k = 0; k < all.size(); ++k) {
            CHECK(all[k].input.front() == static_cast<double>(k));
            CHECK(all[k].target == static_cast<double>(k + win));
        }
    }
}

TEST_CASE("train/test split sizes and determinism") {
    std::vector<double> ramp(12);
    for (std::size_t i = 0; i < ramp.size(); ++i) {
        ramp[i] = static_cast<double>(i);
    }
    const auto ten = data::make_windows(ramp, 2);
    REQUIRE(ten.size() == 10);
    const auto a = data::split_train_test(ten, 0.6, 7);
    CHECK(a.train.size() == 6);
    CHECK(a.test.size() == 4);
    const auto b = data::split_train_test(ten, 0.6, 7);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);

    std::multiset<double> targets;
    for (const auto& s : a.train) {
        targets.insert(s.target);
    }
    for (const auto& s : a.test) {
        targets.insert(s.target);
    }
    std::multiset<double> expected;
    for (const auto& s : ten) {
        expected.insert(s.target);
    }
    CHECK(targets == expected);

    const std::vector<data::WindowSample> two(ten.begin(), ten.begin() + 2);
    const auto c = data::split_train_test(two, 0.6, 1);
    CHECK(c.train.size() == 1);
    CHECK(c.test.size() == 1);
    CHECK_THROWS(data::split_train_test(ten, 1.5, 1));
}

TEST_CASE("written load CSV reads back identically") {
    const auto grid = make_grid(2, {{0.1, 0.25}, {1.0 / 3.0, 0.0}, {0.5, 0.75}}, 2);
    std::ostringstream out;
    data::write_load_csv(out, grid);
    data::IngestOptions o;
    o.slots_per_day = 2;
    o.cell_size = 1.0;
    const auto back = ingest_text(out.str(), o);
    REQUIRE(back.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(back[i].series.values == grid[i].series.values);
    }
}

TEST_CASE("grid construction validates its cells") {
    CHECK_THROWS(make_grid(2, {{0.1}, {0.2, 0.3}}, 1));
    const auto grid = make_grid(2, {{0.1}, {0.2}}, 1);
    CHECK(grid.index_of(data::CellId{1}) == 1u);
    CHECK_FALSE(grid.index_of(data::CellId{9}).has_value());
    CHECK_THROWS_AS(grid.at(data::CellId{9}), std::out_of_range);
}

TEST_CASE("normalization is idempotent and keeps each cell's peak slot") {
    data::SyntheticConfig cfg;
    cfg.grid_side = 4;
    cfg.num_days = 1;
    cfg.seed = 12;
    auto raw = data::generate_synthetic(cfg);
    std::vector<data::CellRecord> scaled = raw.cells();
    for (auto& c : scaled) {
        for (auto& v : c.series.values) {
            v *= 37.0;
        }
    }
    const data::TrafficGrid big(scaled, raw.geometry());
    const auto once = data::normalize_loads(big);
    const auto twice = data::normalize_loads(once);
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(once[i].series.values == twice[i].series.values);
        const auto& a = big[i].series.values;
        const auto& b = once[i].series.values;
        CHECK(std::max_element(a.begin(), a.end()) - a.begin() == std::max_element(b.begin(), b.end()) - b.begin());
    }
}

TEST_CASE("profile of a day-periodic series equals one day") {
    data::TrafficSeries s;
    s.slots_per_day = 5;
    const std::vector<double> day = {0.1, 0.7, 0.35, 0.9, 0.05};
    for (int d = 0; d < 4; ++d) {
        s.values.insert(s.values.end(), day.begin(), day.end());
    }
    const auto p = data::average_day_profile(s).values;
    for (std::size_t t = 0; t < day.size(); ++t) {
        CHECK(p[t] == doctest::Approx(day[t]).epsilon(1e-15));
    }
}
