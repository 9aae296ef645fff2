#ifndef NOMA_HARNESS_HPP
#define NOMA_HARNESS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "noma/config.hpp"
#include "noma/network.hpp"
#include "noma/optimizer.hpp"

namespace noma {

enum class SweepAxis { PowerDbm, ThresholdBpsHz, PairsK, AntennasNt, ClusterSize };

SweepAxis sweep_axis_from_string(const std::string& name);
const char* to_string(SweepAxis a);

struct ScenarioSpec {
    NetworkConfig base;
    SweepAxis axis = SweepAxis::PowerDbm;
    std::vector<double> values;
    std::vector<Algorithm> algorithms;
    int trials = 100;
    std::uint64_t master_seed = 1;
    std::string output_dir = ".";
    int cluster_size = 2;
    ThreeUserGrouping grouping = ThreeUserGrouping::MoreDistinct;
    OptimizerSettings optimizer;

    void validate() const;
};

ScenarioSpec scenario_from_json_text(const std::string& text);
ScenarioSpec scenario_from_json_file(const std::string& path);

struct ResultRow {
    double sweep_value = 0.0;
    Algorithm algorithm = Algorithm::Qp;
    int trial = 0;
    double total_st_bps_hz = 0.0;
    std::vector<double> per_cell_bps_hz;
    std::vector<int> ue_cell, ue_user;   // labels for ue_rates_bps_hz
    std::vector<double> ue_rates_bps_hz;
    int iterations = 0;
    RunStatus status = RunStatus::NumericalFailure;
    double bwr = 0.0; // best-UE / worst-UE rate
};

struct ResultsTable {
    ScenarioSpec spec;
    std::vector<ResultRow> rows; // ordered by (sweep point, trial, algorithm)
};

/// Seed for one (sweep point, trial) cell; shared by all algorithms there
/// (paired comparison) and distinct across cells.
std::uint64_t trial_seed(std::uint64_t master, int sweep_index, int trial);

/// Full Monte Carlo execution. Every trial redraws topology, fading, and
/// pairing. Trials run on NOMA_THREADS worker threads (default 1); the row
/// order is deterministic regardless of scheduling.
ResultsTable run_scenario(const ScenarioSpec& spec);

/// Empirical CDF: (sorted value, fraction <= value) pairs.
std::vector<std::pair<double, double>> cdf(std::vector<double> values);

/// Writes results.csv, ue_rates.csv, and summary.json into dir.
void emit_results(const ResultsTable& table, const std::string& dir);

} // namespace noma

#endif
