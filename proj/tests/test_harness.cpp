#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "noma/harness.hpp"

using namespace noma;

namespace {

std::string small_scenario_json(const std::string& extra = "") {
    return R"({
        "config": {"n_cells": 2, "pairs_per_cell": 1, "tx_antennas": 3,
                     "rx_antennas": 2, "streams": 2},
        "algorithms": ["qp", "comp-qp"],
        "trials": 2,
        "master_seed": 11,
        "sweep": {"axis": "power_dbm", "values": [20, 30]})" +
           extra + "\n}";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("empirical cdf oracle") {
    const auto c = cdf({4.0, 1.0, 3.0, 2.0});
    REQUIRE(c.size() == 4);
    CHECK(c[0] == std::pair<double, double>{1.0, 0.25});
    CHECK(c[1] == std::pair<double, double>{2.0, 0.5});
    CHECK(c[2] == std::pair<double, double>{3.0, 0.75});
    CHECK(c[3] == std::pair<double, double>{4.0, 1.0});
    const auto single = cdf({7.5});
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::pair<double, double>{7.5, 1.0});
    CHECK(cdf({}).empty());
}

TEST_CASE("trial seeds never collide across the grid") {
    std::set<std::uint64_t> seen;
    for (int p = 0; p < 12; ++p)
        for (int t = 0; t < 64; ++t) CHECK(seen.insert(trial_seed(9, p, t)).second);
    // Different masters decouple the whole grid.
    CHECK(trial_seed(1, 0, 0) != trial_seed(2, 0, 0));
}

TEST_CASE("scenario json parsing and validation") {
    const ScenarioSpec spec = scenario_from_json_text(small_scenario_json());
    CHECK(spec.base.n_cells == 2);
    CHECK(spec.axis == SweepAxis::PowerDbm);
    REQUIRE(spec.values.size() == 2);
    CHECK(spec.values[1] == 30.0);
    REQUIRE(spec.algorithms.size() == 2);
    CHECK(spec.algorithms[0] == Algorithm::Qp);
    CHECK(spec.algorithms[1] == Algorithm::CompQp);
    CHECK(spec.trials == 2);
    CHECK(spec.master_seed == 11);
    CHECK_THROWS(scenario_from_json_text("{}"));
    CHECK_THROWS(scenario_from_json_text(R"({"config": {}, "algorithms": ["zzz"],
        "trials": 1, "sweep": {"axis": "power_dbm", "values": [30]}})"));
}

TEST_CASE("sweep axis names round-trip") {
    for (SweepAxis a : {SweepAxis::PowerDbm, SweepAxis::ThresholdBpsHz, SweepAxis::PairsK,
                        SweepAxis::AntennasNt, SweepAxis::ClusterSize})
        CHECK(sweep_axis_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(sweep_axis_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("a run yields one row per sweep point, trial, and algorithm") {
    const ScenarioSpec spec = scenario_from_json_text(small_scenario_json());
    const ResultsTable table = run_scenario(spec);
    REQUIRE(table.rows.size() == 2 * 2 * 2);
    // Row order: sweep point, then trial, then algorithm.
    std::size_t idx = 0;
    for (double value : spec.values)
        for (int t = 0; t < spec.trials; ++t)
            for (Algorithm a : spec.algorithms) {
                const ResultRow& row = table.rows[idx++];
                CHECK(row.sweep_value == value);
                CHECK(row.trial == t);
                CHECK(row.algorithm == a);
                if (row.status == RunStatus::Converged) {
                    CHECK(row.total_st_bps_hz > 0.0);
                    CHECK(row.bwr >= 1.0);
                    REQUIRE(row.ue_rates_bps_hz.size() == 4);
                    double total = 0.0;
                    for (double r : row.ue_rates_bps_hz) total += r;
                    CHECK(total == doctest::Approx(row.total_st_bps_hz).epsilon(1e-9));
                }
            }
}

TEST_CASE("emitted artifacts are byte-identical across reruns") {
    const auto dir_a = std::filesystem::temp_directory_path() / "noma_harness_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "noma_harness_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    const ScenarioSpec spec = scenario_from_json_text(small_scenario_json());
    emit_results(run_scenario(spec), dir_a.string());
    emit_results(run_scenario(spec), dir_b.string());
    for (const char* name : {"results.csv", "ue_rates.csv", "summary.json"}) {
        const std::string a = slurp(dir_a / name), b = slurp(dir_b / name);
        REQUIRE(!a.empty());
        CHECK(a == b);
    }
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("results csv parses back into the table's values") {
    const auto dir = std::filesystem::temp_directory_path() / "noma_harness_c";
    std::filesystem::remove_all(dir);
    const ScenarioSpec spec = scenario_from_json_text(small_scenario_json());
    const ResultsTable table = run_scenario(spec);
    emit_results(table, dir.string());
    std::ifstream in(dir / "results.csv");
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "sweep_value,algorithm,trial,total_st_bps_hz,iterations,status,bwr");
    std::size_t idx = 0;
    std::string line;
    while (std::getline(in, line)) {
        REQUIRE(idx < table.rows.size());
        const ResultRow& row = table.rows[idx++];
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        CHECK(std::stod(field) == row.sweep_value);
        std::getline(ss, field, ',');
        CHECK(field == to_string(row.algorithm));
        std::getline(ss, field, ',');
        CHECK(std::stoi(field) == row.trial);
        std::getline(ss, field, ',');
        CHECK(std::stod(field) == doctest::Approx(row.total_st_bps_hz).epsilon(1e-9));
        std::getline(ss, field, ',');
        CHECK(std::stoi(field) == row.iterations);
        std::getline(ss, field, ',');
        CHECK(field == to_string(row.status));
    }
    CHECK(idx == table.rows.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("worker threads do not change the row contents") {
    const ScenarioSpec spec = scenario_from_json_text(small_scenario_json());
    ResultsTable serial, threaded;
    {
        setenv("NOMA_THREADS", "1", 1);
        serial = run_scenario(spec);
    }
    {
        setenv("NOMA_THREADS", "3", 1);
        threaded = run_scenario(spec);
    }
    setenv("NOMA_THREADS", "1", 1);
    REQUIRE(serial.rows.size() == threaded.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].total_st_bps_hz == threaded.rows[i].total_st_bps_hz);
        CHECK(serial.rows[i].iterations == threaded.rows[i].iterations);
        CHECK(serial.rows[i].status == threaded.rows[i].status);
    }
}

TEST_CASE("scenario validation rejects bad specs") {
    ScenarioSpec spec = scenario_from_json_text(small_scenario_json());
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = scenario_from_json_text(small_scenario_json());
    spec.values.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = scenario_from_json_text(small_scenario_json());
    spec.cluster_size = 4;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
