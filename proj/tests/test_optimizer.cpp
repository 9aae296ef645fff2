#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "noma/harness.hpp"
#include "noma/network.hpp"
#include "noma/optimizer.hpp"

using namespace noma;

namespace {

NetworkConfig small_config() {
    NetworkConfig cfg;
    cfg.n_cells = 2;
    cfg.pairs_per_cell = 1;
    cfg.tx_antennas = 3;
    cfg.rx_antennas = 2;
    cfg.streams = 2;
    return cfg;
}

struct Drawn {
    Topology topo;
    Channels channels;
    ClusterPlan plan;
};

Drawn draw(const NetworkConfig& cfg, std::uint64_t seed) {
    Drawn d;
    d.topo = build_topology(cfg, seed);
    d.channels = sample_channels(d.topo, cfg, seed);
    d.plan = pair_users(d.topo, cfg, 2, seed);
    return d;
}

double exact_min_rate(const Drawn& d, const NetworkConfig& cfg, const PrecoderSet& v) {
    const Channels normalized = d.channels.scaled(1.0 / std::sqrt(noise_power(cfg)));
    const TaskList tasks = make_tasks(d.plan, cfg.n_cells, cfg.users_per_cell(), DecodeMode::Sic);
    const RateReport rep = evaluate_rates(normalized, v, 1.0, tasks);
    double mn = rep.entries.front().rate_nats;
    for (const auto& e : rep.entries) mn = std::min(mn, e.rate_nats);
    return mn;
}

} // namespace

TEST_CASE("initialization reaches the QoS region on most draws") {
    const NetworkConfig cfg = small_config();
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Drawn d = draw(cfg, seed);
        OptimizerSettings st;
        const InitResult init = initialize(d.channels, d.plan, cfg, st);
        if (!init.success) continue;
        ++ok;
        CHECK(exact_min_rate(d, cfg, init.v) >= qos_threshold_nats(cfg) - 1e-9);
        for (double p : sum_power(init.v)) CHECK(p <= power_budget_watts(cfg) + 1e-9);
    }
    CHECK(ok >= 19);
}

TEST_CASE("a zero QoS threshold makes initialization immediate") {
    NetworkConfig cfg = small_config();
    cfg.qos_threshold_bps_hz = 0.0;
    const Drawn d = draw(cfg, 3);
    OptimizerSettings st;
    const InitResult init = initialize(d.channels, d.plan, cfg, st);
    CHECK(init.success);
    CHECK(init.taus.empty());
}

TEST_CASE("initialization honestly fails when the power budget is hopeless") {
    NetworkConfig cfg = small_config();
    cfg.power_budget_dbm = -70.0; // nanowatts against a thermal noise floor
    const Drawn d = draw(cfg, 5);
    OptimizerSettings st;
    const InitResult init = initialize(d.channels, d.plan, cfg, st);
    CHECK(!init.success);
}

TEST_CASE("path following ascends monotonically and preserves feasibility") {
    const NetworkConfig cfg = small_config();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Drawn d = draw(cfg, seed);
        OptimizerSettings st;
        st.max_iterations = 25;
        const IterationTrace tr = run_path_following(d.channels, d.plan, cfg, st);
        if (tr.status == RunStatus::InitFailed) continue;
        REQUIRE(!tr.objectives_nats.empty());
        for (std::size_t i = 1; i < tr.objectives_nats.size(); ++i)
            CHECK(tr.objectives_nats[i] >= tr.objectives_nats[i - 1] - 1e-7);
        CHECK(exact_min_rate(d, cfg, tr.final_precoders) >= qos_threshold_nats(cfg) - 1e-6);
        for (double p : sum_power(tr.final_precoders)) CHECK(p <= power_budget_watts(cfg) + 1e-9);
        // The recorded report matches a fresh evaluation of the final point.
        const Channels normalized = d.channels.scaled(1.0 / std::sqrt(noise_power(cfg)));
        const TaskList tasks =
            make_tasks(d.plan, cfg.n_cells, cfg.users_per_cell(), DecodeMode::Sic);
        const RateReport rep = evaluate_rates(normalized, tr.final_precoders, 1.0, tasks);
        CHECK(rep.total_nats == doctest::Approx(tr.objectives_nats.back()).epsilon(1e-9));
    }
}

TEST_CASE("converged runs report a stationarity gap within tolerance") {
    const NetworkConfig cfg = small_config();
    int converged = 0;
    for (std::uint64_t seed = 1; seed <= 5 && converged < 3; ++seed) {
        const Drawn d = draw(cfg, seed);
        OptimizerSettings st;
        const IterationTrace tr = run_path_following(d.channels, d.plan, cfg, st);
        if (tr.status != RunStatus::Converged) continue;
        ++converged;
        CHECK(tr.final_relative_change <= st.epsilon);
        CHECK(kkt_gap(tr) ==
              std::max(tr.final_relative_change, tr.final_certificate_residual));
    }
    CHECK(converged >= 3);
}

TEST_CASE("matrix-form runs hold the same invariants") {
    const NetworkConfig cfg = small_config();
    const Drawn d = draw(cfg, 2);
    OptimizerSettings st;
    st.algorithm = Algorithm::Sdp;
    st.max_iterations = 20;
    const IterationTrace tr = run_path_following(d.channels, d.plan, cfg, st);
    REQUIRE(tr.status != RunStatus::NumericalFailure);
    if (tr.status != RunStatus::InitFailed) {
        for (std::size_t i = 1; i < tr.objectives_nats.size(); ++i)
            CHECK(tr.objectives_nats[i] >= tr.objectives_nats[i - 1] - 1e-7);
        CHECK(exact_min_rate(d, cfg, tr.final_precoders) >= qos_threshold_nats(cfg) - 1e-6);
    }
}

TEST_CASE("scalar-form runs work on single-antenna receivers") {
    NetworkConfig cfg = small_config();
    cfg.rx_antennas = 1;
    cfg.streams = 1;
    const Drawn d = draw(cfg, 4);
    OptimizerSettings st;
    st.algorithm = Algorithm::Soc;
    st.max_iterations = 20;
    const IterationTrace tr = run_path_following(d.channels, d.plan, cfg, st);
    REQUIRE(tr.status != RunStatus::NumericalFailure);
    if (tr.status != RunStatus::InitFailed) {
        for (std::size_t i = 1; i < tr.objectives_nats.size(); ++i)
            CHECK(tr.objectives_nats[i] >= tr.objectives_nats[i - 1] - 1e-7);
        CHECK(exact_min_rate(d, cfg, tr.final_precoders) >= qos_threshold_nats(cfg) - 1e-6);
    }
}

TEST_CASE("baselines run through the shared loop and stay feasible") {
    const NetworkConfig cfg = small_config();
    const Drawn d = draw(cfg, 6);
    for (Algorithm a : {Algorithm::CompQp, Algorithm::DpcQp}) {
        OptimizerSettings st;
        st.algorithm = a;
        st.max_iterations = 20;
        const IterationTrace tr = run_baseline(d.channels, d.plan, cfg, st);
        REQUIRE(tr.status != RunStatus::NumericalFailure);
        if (tr.status == RunStatus::InitFailed) continue;
        for (std::size_t i = 1; i < tr.objectives_nats.size(); ++i)
            CHECK(tr.objectives_nats[i] >= tr.objectives_nats[i - 1] - 1e-7);
        for (double p : sum_power(tr.final_precoders)) CHECK(p <= power_budget_watts(cfg) + 1e-9);
    }
    OptimizerSettings st;
    st.algorithm = Algorithm::Qp;
    CHECK_THROWS_AS(run_baseline(d.channels, d.plan, cfg, st), std::invalid_argument);
}

TEST_CASE("traces are deterministic for a fixed draw") {
    const NetworkConfig cfg = small_config();
    const Drawn d = draw(cfg, 7);
    OptimizerSettings st;
    st.max_iterations = 10;
    const IterationTrace a = run_path_following(d.channels, d.plan, cfg, st);
    const IterationTrace b = run_path_following(d.channels, d.plan, cfg, st);
    REQUIRE(a.status == b.status);
    REQUIRE(a.objectives_nats.size() == b.objectives_nats.size());
    for (std::size_t i = 0; i < a.objectives_nats.size(); ++i)
        CHECK(a.objectives_nats[i] == b.objectives_nats[i]);
    for (std::size_t i = 0; i < a.final_precoders.v.size(); ++i)
        CHECK(a.final_precoders.v[i] == b.final_precoders.v[i]);
}

TEST_CASE("algorithm names round-trip") {
    for (Algorithm a : {Algorithm::Qp, Algorithm::Sdp, Algorithm::Soc, Algorithm::CompQp,
                        Algorithm::DpcQp})
        CHECK(algorithm_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(algorithm_from_string("bogus"), std::invalid_argument);
}
