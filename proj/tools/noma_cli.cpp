// Command line front end: scenario execution, self-checks, and problem-size
// reporting.

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noma/harness.hpp"
#include "noma/lowering.hpp"
#include "noma/rng.hpp"
#include "noma/surrogate.hpp"

namespace {

Eigen::MatrixXcd random_matrix(noma::Rng& rng, int rows, int cols) {
    Eigen::MatrixXcd m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.cnormal();
    return m;
}

Eigen::MatrixXcd random_pd(noma::Rng& rng, int n) {
    const Eigen::MatrixXcd g = random_matrix(rng, n, n + 2);
    return g * g.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(n, n);
}

int run_inequality_checks(int samples) {
    noma::Rng rng(2024);
    double worst1 = 0.0, worst2 = 0.0, worst3 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const int nr = 1 + static_cast<int>(rng.uniform_index(3));
        const int l = 1 + static_cast<int>(rng.uniform_index(3));
        worst1 = std::min(worst1, noma::check_inequality_in1(random_matrix(rng, nr, l),
                                                             random_matrix(rng, nr, l),
                                                             random_pd(rng, nr), random_pd(rng, nr)));
        const int p = 1 + static_cast<int>(rng.uniform_index(4));
        worst2 = std::min(worst2, noma::check_inequality_in2(random_pd(rng, p), random_pd(rng, p)));
        worst3 = std::min(worst3,
                          noma::check_inequality_zf8(std::exp(rng.uniform(-4.0, 4.0)),
                                                     std::exp(rng.uniform(-4.0, 4.0))));
    }
    int failures = 0;
    auto report = [&](const char* name, double worst) {
        const bool ok = worst >= -1e-9;
        std::printf("%-22s worst residual %.3e  [%s]\n", name, worst, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };
    report("matrix-fraction bound", worst1);
    report("log-det bound", worst2);
    report("log-fraction bound", worst3);
    return failures;
}

int run_touching_checks() {
    noma::NetworkConfig cfg;
    cfg.n_cells = 2;
    cfg.pairs_per_cell = 1;
    cfg.tx_antennas = 3;
    cfg.rx_antennas = 2;
    cfg.streams = 2;
    const auto topo = noma::build_topology(cfg, 7);
    const auto raw = noma::sample_channels(topo, cfg, 7);
    const auto channels = raw.scaled(1.0 / std::sqrt(noma::noise_power(cfg)));
    const auto plan = noma::pair_users(topo, cfg, 2, 7);
    const auto tasks = noma::make_tasks(plan, cfg.n_cells, cfg.users_per_cell(), noma::DecodeMode::Sic);
    const auto anchor = noma::seed_precoder(channels, noma::power_budget_watts(cfg), cfg.streams);

    int failures = 0;
    auto report = [&](const char* name, double rel) {
        const bool ok = rel <= 1e-8;
        std::printf("%-22s max anchor gap %.3e  [%s]\n", name, rel, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };

    const auto qp = noma::qp_minorants(channels, anchor, 1.0, tasks);
    const auto sdp = noma::sdp_minorants(channels, anchor, 1.0, tasks);
    double gap_qp = 0.0, gap_sdp = 0.0;
    for (std::size_t m = 0; m < tasks.size(); ++m) {
        for (std::size_t d = 0; d < tasks[m].decoders.size(); ++d) {
            const double rate = noma::logdet_rate_nats(channels, anchor, 1.0, tasks[m].cell,
                                                       tasks[m].user, tasks[m].decoders[d]);
            const double denom = std::max(std::abs(rate), 1.0);
            gap_qp = std::max(gap_qp,
                              std::abs(noma::eval_qp_minorant(qp.terms[m][d], channels, anchor) - rate) / denom);
            gap_sdp = std::max(
                gap_sdp,
                std::abs(noma::eval_sdp_minorant(sdp.terms[m][d], channels, anchor, anchor) - rate) / denom);
        }
    }
    report("quadratic surrogate", gap_qp);
    report("sdp surrogate", gap_sdp);

    noma::NetworkConfig miso = cfg;
    miso.rx_antennas = 1;
    miso.streams = 1;
    const auto topo1 = noma::build_topology(miso, 9);
    const auto ch1 = noma::sample_channels(topo1, miso, 9).scaled(1.0 / std::sqrt(noma::noise_power(miso)));
    const auto plan1 = noma::pair_users(topo1, miso, 2, 9);
    const auto tasks1 =
        noma::make_tasks(plan1, miso.n_cells, miso.users_per_cell(), noma::DecodeMode::Sic);
    const auto v1 = noma::seed_precoder(ch1, noma::power_budget_watts(miso), 1);
    const auto soc = noma::soc_minorants(ch1, v1, 1.0, tasks1);
    double gap_soc = 0.0;
    for (std::size_t m = 0; m < tasks1.size(); ++m) {
        for (std::size_t d = 0; d < tasks1[m].decoders.size(); ++d) {
            const double rate = noma::logdet_rate_nats(ch1, soc.anchor, 1.0, tasks1[m].cell,
                                                       tasks1[m].user, tasks1[m].decoders[d]);
            gap_soc = std::max(gap_soc,
                               std::abs(noma::eval_soc_minorant(soc.terms[m][d], ch1, soc.anchor) - rate) /
                                   std::max(std::abs(rate), 1.0));
        }
    }
    report("soc surrogate", gap_soc);
    return failures;
}

int run_dims_checks(int configs, bool verbose) {
    noma::Rng rng(31);
    int failures = 0;
    for (int i = 0; i < configs; ++i) {
        noma::NetworkConfig cfg;
        cfg.n_cells = 1 + static_cast<int>(rng.uniform_index(3));
        cfg.pairs_per_cell = 1 + static_cast<int>(rng.uniform_index(3));
        cfg.rx_antennas = 1 + static_cast<int>(rng.uniform_index(2));
        cfg.tx_antennas = cfg.rx_antennas + 1 + static_cast<int>(rng.uniform_index(3));
        cfg.streams = 1 + static_cast<int>(rng.uniform_index(cfg.rx_antennas));
        for (noma::SubproblemKind kind :
             {noma::SubproblemKind::Qp, noma::SubproblemKind::Sdp, noma::SubproblemKind::Soc}) {
            const char* kind_name = kind == noma::SubproblemKind::Qp    ? "qp"
                                    : kind == noma::SubproblemKind::Sdp ? "sdp"
                                                                        : "soc";
            try {
                const auto dims = noma::problem_dims(cfg, kind);
                if (verbose)
                    std::printf("N=%d K=%d Nt=%d Nr=%d L=%d  %-3s  n=%d m=%d  [ok]\n", cfg.n_cells,
                                cfg.pairs_per_cell, cfg.tx_antennas, cfg.rx_antennas, cfg.streams,
                                kind_name, dims.n, dims.m);
            } catch (const std::exception& e) {
                std::printf("N=%d K=%d Nt=%d Nr=%d L=%d  %-3s  [FAIL] %s\n", cfg.n_cells,
                            cfg.pairs_per_cell, cfg.tx_antennas, cfg.rx_antennas, cfg.streams,
                            kind_name, e.what());
                ++failures;
            }
        }
    }
    return failures;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multicell NOMA precoder design toolkit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Execute a scenario file and write CSV/JSON results");
    std::string scenario_path;
    int trials_override = -1;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    std::string out_override;
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--trials", trials_override, "Override trial count");
    run->add_option("--seed", seed_override, "Override master seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--out", out_override, "Override output directory");

    auto* check = app.add_subcommand("check", "Run the property and oracle suites");
    int samples = 10000;
    check->add_option("--samples", samples, "Random instances per inequality oracle");

    auto* dims = app.add_subcommand("dims", "Compare problem-size formulas with built programs");
    int n_configs = 20;
    dims->add_option("--configs", n_configs, "Number of random configurations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            noma::ScenarioSpec spec = noma::scenario_from_json_file(scenario_path);
            if (trials_override > 0) spec.trials = trials_override;
            if (seed_set) spec.master_seed = seed_override;
            if (!out_override.empty()) spec.output_dir = out_override;
            const noma::ResultsTable table = noma::run_scenario(spec);
            noma::emit_results(table, spec.output_dir);
            std::printf("wrote %zu rows to %s\n", table.rows.size(), spec.output_dir.c_str());
            return 0;
        }
        if (*check) {
            int failures = run_inequality_checks(samples);
            failures += run_touching_checks();
            failures += run_dims_checks(20, false);
            std::printf("%s\n", failures == 0 ? "all checks passed" : "CHECKS FAILED");
            return failures == 0 ? 0 : 1;
        }
        if (*dims) {
            const int failures = run_dims_checks(n_configs, true);
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
