#include "noma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "noma/rates.hpp"
#include "noma/rng.hpp"

namespace noma {

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "power_dbm") return SweepAxis::PowerDbm;
    if (name == "threshold_bps_hz") return SweepAxis::ThresholdBpsHz;
    if (name == "pairs_K") return SweepAxis::PairsK;
    if (name == "antennas_Nt") return SweepAxis::AntennasNt;
    if (name == "cluster_size") return SweepAxis::ClusterSize;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::PowerDbm: return "power_dbm";
        case SweepAxis::ThresholdBpsHz: return "threshold_bps_hz";
        case SweepAxis::PairsK: return "pairs_K";
        case SweepAxis::AntennasNt: return "antennas_Nt";
        case SweepAxis::ClusterSize: return "cluster_size";
    }
    return "?";
}

void ScenarioSpec::validate() const {
    base.validate();
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    if (algorithms.empty()) throw std::invalid_argument("need at least one algorithm");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (cluster_size < 1 || cluster_size > 3)
        throw std::invalid_argument("cluster_size must be 1, 2, or 3");
    if (axis == SweepAxis::ClusterSize)
        for (double v : values)
            if (v != 1.0 && v != 2.0 && v != 3.0)
                throw std::invalid_argument("cluster_size sweep values must be 1, 2, or 3");
}

ScenarioSpec scenario_from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ScenarioSpec spec;
    if (j.contains("config")) spec.base = config_from_json_text(j.at("config").dump());
    const auto& sweep = j.at("sweep");
    spec.axis = sweep_axis_from_string(sweep.at("axis").get<std::string>());
    spec.values = sweep.at("values").get<std::vector<double>>();
    for (const auto& name : j.at("algorithms"))
        spec.algorithms.push_back(algorithm_from_string(name.get<std::string>()));
    spec.trials = j.value("trials", 100);
    spec.master_seed = j.value("master_seed", std::uint64_t{1});
    spec.output_dir = j.value("output_dir", std::string("."));
    spec.cluster_size = j.value("cluster_size", 2);
    if (j.value("grouping", std::string("more-distinct")) == "less-distinct")
        spec.grouping = ThreeUserGrouping::LessDistinct;
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        spec.optimizer.epsilon = o.value("epsilon", spec.optimizer.epsilon);
        spec.optimizer.max_iterations = o.value("max_iterations", spec.optimizer.max_iterations);
        spec.optimizer.max_init_iterations =
            o.value("max_init_iterations", spec.optimizer.max_init_iterations);
    }
    spec.validate();
    return spec;
}

ScenarioSpec scenario_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json_text(ss.str());
}

std::uint64_t trial_seed(std::uint64_t master, int sweep_index, int trial) {
    // (sweep_index, trial) -> unique purpose word; both are < 2^31 in practice.
    const std::uint64_t purpose =
        (static_cast<std::uint64_t>(sweep_index) << 32) | (static_cast<std::uint64_t>(trial) + 1);
    return derive_seed(master, purpose);
}

namespace {

NetworkConfig config_at(const ScenarioSpec& spec, double value, int& cluster_size) {
    NetworkConfig cfg = spec.base;
    cluster_size = spec.cluster_size;
    switch (spec.axis) {
        case SweepAxis::PowerDbm: cfg.power_budget_dbm = value; break;
        case SweepAxis::ThresholdBpsHz: cfg.qos_threshold_bps_hz = value; break;
        case SweepAxis::PairsK: cfg.pairs_per_cell = static_cast<int>(value); break;
        case SweepAxis::AntennasNt: cfg.tx_antennas = static_cast<int>(value); break;
        case SweepAxis::ClusterSize: cluster_size = static_cast<int>(value); break;
    }
    cfg.streams = std::min(cfg.streams, std::min(cfg.tx_antennas, cfg.rx_antennas));
    if (cluster_size == 3) cfg.ue_classes = 3;
    cfg.validate();
    return cfg;
}

int thread_count() {
    if (const char* env = std::getenv("NOMA_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

ResultRow run_one(const ScenarioSpec& spec, double value, const NetworkConfig& cfg,
                  int cluster_size, int trial, Algorithm alg, std::uint64_t seed) {
    const Topology topo = build_topology(cfg, seed);
    const Channels channels = sample_channels(topo, cfg, seed);
    const ClusterPlan plan = pair_users(topo, cfg, cluster_size, seed, spec.grouping);

    OptimizerSettings settings = spec.optimizer;
    settings.algorithm = alg;
    const IterationTrace trace = run_path_following(channels, plan, cfg, settings);

    ResultRow row;
    row.sweep_value = value;
    row.algorithm = alg;
    row.trial = trial;
    row.status = trace.status;
    row.iterations = std::max<int>(0, static_cast<int>(trace.objectives_nats.size()) - 1);
    const double ln2 = std::log(2.0);
    row.total_st_bps_hz = trace.final_report.total_nats / ln2;
    for (double p : trace.final_report.per_cell_nats) row.per_cell_bps_hz.push_back(p / ln2);
    double best = 0.0, worst = std::numeric_limits<double>::infinity();
    for (const auto& e : trace.final_report.entries) {
        const double r = e.rate_nats / ln2;
        row.ue_cell.push_back(e.cell);
        row.ue_user.push_back(e.user);
        row.ue_rates_bps_hz.push_back(r);
        best = std::max(best, r);
        worst = std::min(worst, r);
    }
    row.bwr = worst > 0.0 ? best / worst : std::numeric_limits<double>::infinity();
    return row;
}

} // namespace

ResultsTable run_scenario(const ScenarioSpec& spec) {
    spec.validate();
    ResultsTable table;
    table.spec = spec;
    const int n_points = static_cast<int>(spec.values.size());
    const int n_algs = static_cast<int>(spec.algorithms.size());
    table.rows.resize(static_cast<std::size_t>(n_points) * spec.trials * n_algs);

    const int n_items = n_points * spec.trials;
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int item = next.fetch_add(1); item < n_items; item = next.fetch_add(1)) {
            const int p = item / spec.trials;
            const int t = item % spec.trials;
            int cluster_size = spec.cluster_size;
            const NetworkConfig cfg = config_at(spec, spec.values[p], cluster_size);
            const std::uint64_t seed = trial_seed(spec.master_seed, p, t);
            for (int a = 0; a < n_algs; ++a)
                table.rows[static_cast<std::size_t>(item) * n_algs + a] =
                    run_one(spec, spec.values[p], cfg, cluster_size, t, spec.algorithms[a], seed);
        }
    };

    const int n_threads = std::min(thread_count(), n_items);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return table;
}

std::vector<std::pair<double, double>> cdf(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(values.size());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out.emplace_back(values[i], static_cast<double>(i + 1) / n);
    return out;
}

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

nlohmann::json spec_to_json(const ScenarioSpec& spec) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(config_to_json_text(spec.base));
    j["sweep"] = {{"axis", to_string(spec.axis)}, {"values", spec.values}};
    std::vector<std::string> algs;
    for (Algorithm a : spec.algorithms) algs.emplace_back(to_string(a));
    j["algorithms"] = algs;
    j["trials"] = spec.trials;
    j["master_seed"] = spec.master_seed;
    j["output_dir"] = spec.output_dir;
    j["cluster_size"] = spec.cluster_size;
    j["grouping"] =
        spec.grouping == ThreeUserGrouping::MoreDistinct ? "more-distinct" : "less-distinct";
    j["optimizer"] = {{"epsilon", spec.optimizer.epsilon},
                      {"max_iterations", spec.optimizer.max_iterations},
                      {"max_init_iterations", spec.optimizer.max_init_iterations}};
    return j;
}

} // namespace

void emit_results(const ResultsTable& table, const std::string& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream csv(std::filesystem::path(dir) / "results.csv");
        csv << "sweep_value,algorithm,trial,total_st_bps_hz,iterations,status,bwr\n";
        for (const auto& r : table.rows)
            csv << fmt(r.sweep_value) << ',' << to_string(r.algorithm) << ',' << r.trial << ','
                << fmt(r.total_st_bps_hz) << ',' << r.iterations << ',' << to_string(r.status)
                << ',' << fmt(r.bwr) << '\n';
    }
    {
        std::ofstream csv(std::filesystem::path(dir) / "ue_rates.csv");
        csv << "sweep_value,algorithm,trial,cell,user,rate_bps_hz\n";
        for (const auto& r : table.rows)
            for (std::size_t u = 0; u < r.ue_rates_bps_hz.size(); ++u)
                csv << fmt(r.sweep_value) << ',' << to_string(r.algorithm) << ',' << r.trial << ','
                    << r.ue_cell[u] << ',' << r.ue_user[u] << ','
                    << fmt(r.ue_rates_bps_hz[u]) << '\n';
    }
    {
        nlohmann::json summary;
        summary["spec"] = spec_to_json(table.spec);
        nlohmann::json aggs = nlohmann::json::array();
        for (double value : table.spec.values) {
            for (Algorithm alg : table.spec.algorithms) {
                double sum = 0.0, sum_bwr = 0.0, sum_iter = 0.0;
                int n = 0, converged = 0;
                for (const auto& r : table.rows) {
                    if (r.sweep_value != value || r.algorithm != alg) continue;
                    sum += r.total_st_bps_hz;
                    sum_bwr += r.bwr;
                    sum_iter += r.iterations;
                    converged += r.status == RunStatus::Converged ? 1 : 0;
                    ++n;
                }
                if (n == 0) continue;
                aggs.push_back({{"sweep_value", value},
                                {"algorithm", to_string(alg)},
                                {"trials", n},
                                {"mean_total_st_bps_hz", sum / n},
                                {"mean_bwr", sum_bwr / n},
                                {"mean_iterations", sum_iter / n},
                                {"converged_fraction", static_cast<double>(converged) / n}});
            }
        }
        summary["aggregates"] = aggs;
        std::ofstream out(std::filesystem::path(dir) / "summary.json");
        out << summary.dump(2) << '\n';
    }
}

} // namespace noma
