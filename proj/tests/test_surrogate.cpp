#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "noma/network.hpp"
#include "noma/rates.hpp"
#include "noma/rng.hpp"
#include "noma/surrogate.hpp"

using namespace noma;

namespace {

struct Fixture {
    NetworkConfig cfg;
    Channels channels;
    ClusterPlan plan;
    TaskList tasks;
    PrecoderSet anchor;
    Rng rng;

    explicit Fixture(std::uint64_t seed, int n_cells = 2, int pairs = 1, int nt = 3, int nr = 2,
                     int streams = 2)
        : cfg{}, rng(derive_seed(seed, 1234)) {
        cfg.n_cells = n_cells;
        cfg.pairs_per_cell = pairs;
        cfg.tx_antennas = nt;
        cfg.rx_antennas = nr;
        cfg.streams = streams;
        const Topology topo = build_topology(cfg, seed);
        channels = sample_channels(topo, cfg, seed).scaled(1e5);
        plan = pair_users(topo, cfg, 2, seed);
        tasks = make_tasks(plan, n_cells, cfg.users_per_cell(), DecodeMode::Sic);
        anchor = random_set(0.8);
    }

    PrecoderSet random_set(double scale) {
        PrecoderSet v = PrecoderSet::zero(cfg.n_cells, cfg.users_per_cell(), cfg.tx_antennas,
                                          cfg.streams);
        for (auto& m : v.v)
            for (int c = 0; c < m.cols(); ++c)
                for (int r = 0; r < m.rows(); ++r) m(r, c) = scale * rng.cnormal();
        return v;
    }

    double exact(std::size_t t, std::size_t d, const PrecoderSet& v) const {
        return logdet_rate_nats(channels, v, 1.0, tasks[t].cell, tasks[t].user,
                                tasks[t].decoders[d]);
    }
};

Eigen::MatrixXcd random_hermitian_pd(Rng& rng, int n, double ridge) {
    Eigen::MatrixXcd a(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) a(r, c) = rng.cnormal();
    return a * a.adjoint() + ridge * Eigen::MatrixXcd::Identity(n, n);
}

} // namespace

TEST_CASE("quadratic minorants touch the exact rates at the anchor") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Fixture f(seed);
        const QpMinorantSet set = qp_minorants(f.channels, f.anchor, 1.0, f.tasks);
        for (std::size_t t = 0; t < f.tasks.size(); ++t)
            for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                const double exact = f.exact(t, d, f.anchor);
                const double sur = eval_qp_minorant(set.terms[t][d], f.channels, f.anchor);
                CHECK(std::abs(sur - exact) <= 1e-8 * std::max(1.0, std::abs(exact)));
                if (exact > 0.1) CHECK(set.terms[t][d].a < 0.0);
            }
    }
}

TEST_CASE("quadratic minorants never exceed the exact rates") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Fixture f(seed);
        const QpMinorantSet set = qp_minorants(f.channels, f.anchor, 1.0, f.tasks);
        for (int p = 0; p < 200; ++p) {
            const PrecoderSet v = f.random_set(0.2 + 0.2 * (p % 8));
            for (std::size_t t = 0; t < f.tasks.size(); ++t)
                for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                    const double exact = f.exact(t, d, v);
                    const double sur = eval_qp_minorant(set.terms[t][d], f.channels, v);
                    CHECK(sur <= exact + 1e-9 * std::max(1.0, std::abs(exact)));
                }
        }
    }
}

TEST_CASE("quadratic minorants are concave along random segments") {
    Fixture f(3);
    const QpMinorantSet set = qp_minorants(f.channels, f.anchor, 1.0, f.tasks);
    for (int p = 0; p < 50; ++p) {
        const PrecoderSet a = f.random_set(0.7), b = f.random_set(0.7);
        PrecoderSet mid = a;
        for (std::size_t i = 0; i < mid.v.size(); ++i) mid.v[i] = 0.5 * (a.v[i] + b.v[i]);
        for (std::size_t t = 0; t < f.tasks.size(); ++t)
            for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                const double fa = eval_qp_minorant(set.terms[t][d], f.channels, a);
                const double fb = eval_qp_minorant(set.terms[t][d], f.channels, b);
                const double fm = eval_qp_minorant(set.terms[t][d], f.channels, mid);
                CHECK(fm >= 0.5 * (fa + fb) - 1e-9);
            }
    }
}

TEST_CASE("matrix-form minorants touch at the anchor and never overestimate") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Fixture f(seed);
        const SdpMinorantSet set = sdp_minorants(f.channels, f.anchor, 1.0, f.tasks);
        for (std::size_t t = 0; t < f.tasks.size(); ++t)
            for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                const double exact = f.exact(t, d, f.anchor);
                const double sur =
                    eval_sdp_minorant(set.terms[t][d], f.channels, f.anchor, f.anchor);
                CHECK(std::abs(sur - exact) <= 1e-8 * std::max(1.0, std::abs(exact)));
            }
        int checked = 0;
        for (int p = 0; p < 200; ++p) {
            // Perturb around the anchor so the trust region usually holds.
            const PrecoderSet step = f.random_set(0.02 + 0.02 * (p % 8));
            PrecoderSet v = f.anchor;
            for (std::size_t i = 0; i < v.v.size(); ++i) v.v[i] += step.v[i];
            for (std::size_t t = 0; t < f.tasks.size(); ++t)
                for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                    double sur;
                    try {
                        sur = eval_sdp_minorant(set.terms[t][d], f.channels, f.anchor, v);
                    } catch (const std::domain_error&) {
                        continue; // outside the bound's validity region
                    }
                    const double exact = f.exact(t, d, v);
                    CHECK(sur <= exact + 1e-9 * std::max(1.0, std::abs(exact)));
                    ++checked;
                }
        }
        CHECK(checked > 500);
    }
}

TEST_CASE("scalar minorants touch at the anchor and never overestimate") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Fixture f(seed, 3, 1, 4, 1, 1);
        const SocMinorantSet set = soc_minorants(f.channels, f.anchor, 1.0, f.tasks);
        // The set rotates its anchor copy; evaluate against that one.
        for (std::size_t t = 0; t < f.tasks.size(); ++t)
            for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                const double exact = f.exact(t, d, set.anchor);
                const double sur = eval_soc_minorant(set.terms[t][d], f.channels, set.anchor);
                CHECK(std::abs(sur - exact) <= 1e-8 * std::max(1.0, std::abs(exact)));
            }
        int checked = 0;
        for (int p = 0; p < 200; ++p) {
            const PrecoderSet v = f.random_set(0.3 + 0.15 * (p % 8));
            for (std::size_t t = 0; t < f.tasks.size(); ++t)
                for (std::size_t d = 0; d < f.tasks[t].decoders.size(); ++d) {
                    double sur;
                    try {
                        sur = eval_soc_minorant(set.terms[t][d], f.channels, v);
                    } catch (const TrustRegionError&) {
                        continue;
                    }
                    const double exact = f.exact(t, d, v);
                    CHECK(sur <= exact + 1e-9 * std::max(1.0, std::abs(exact)));
                    ++checked;
                }
        }
        CHECK(checked > 300);
    }
}

TEST_CASE("scalar bound coefficients at z_bar = 1") {
    CHECK(soc_a(1.0) == doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-12));
    CHECK(soc_b(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // Touching: ln(1+z) = a - b/z at z = z_bar for several anchors.
    for (double zb : {0.1, 0.5, 1.0, 3.0, 10.0})
        CHECK(std::log1p(zb) == doctest::Approx(soc_a(zb) - soc_b(zb) / zb).epsilon(1e-12));
}

TEST_CASE("trust-region violations raise the dedicated error") {
    Fixture f(7);
    const SdpMinorantSet sdp = sdp_minorants(f.channels, f.anchor, 1.0, f.tasks);
    bool raised = false;
    for (int p = 0; p < 200 && !raised; ++p) {
        const PrecoderSet v = f.random_set(3.0);
        for (std::size_t t = 0; t < f.tasks.size() && !raised; ++t)
            for (std::size_t d = 0; d < f.tasks[t].decoders.size() && !raised; ++d) {
                try {
                    eval_sdp_minorant(sdp.terms[t][d], f.channels, f.anchor, v);
                } catch (const std::domain_error&) {
                    raised = true;
                }
            }
    }
    CHECK(raised);

    Fixture g(7, 2, 1, 3, 1, 1);
    const SocMinorantSet soc = soc_minorants(g.channels, g.anchor, 1.0, g.tasks);
    raised = false;
    for (int p = 0; p < 200 && !raised; ++p) {
        // Negating the anchor direction drives the linearized power phi below 0.
        PrecoderSet v = soc.anchor;
        for (auto& m : v.v) m = -(1.0 + 0.1 * p) * m;
        for (std::size_t t = 0; t < g.tasks.size() && !raised; ++t)
            for (std::size_t d = 0; d < g.tasks[t].decoders.size() && !raised; ++d) {
                if (soc_phi(soc.terms[t][d], g.channels, v) > 0.0) continue;
                try {
                    eval_soc_minorant(soc.terms[t][d], g.channels, v);
                } catch (const TrustRegionError&) {
                    raised = true;
                }
            }
    }
    CHECK(raised);
}

TEST_CASE("matrix inequality residuals are nonnegative on random instances") {
    Rng rng(99);
    for (int p = 0; p < 2000; ++p) {
        const int n = 1 + static_cast<int>(rng.uniform() * 3.999);
        const int l = 1 + static_cast<int>(rng.uniform() * 2.999);
        Eigen::MatrixXcd v(n, l), vb(n, l);
        for (int c = 0; c < l; ++c)
            for (int r = 0; r < n; ++r) {
                v(r, c) = rng.cnormal();
                vb(r, c) = rng.cnormal();
            }
        const Eigen::MatrixXcd x = random_hermitian_pd(rng, n, 0.1);
        const Eigen::MatrixXcd xb = random_hermitian_pd(rng, n, 0.1);
        CHECK(check_inequality_in1(v, vb, x, xb) >= -1e-9);
        CHECK(check_inequality_in2(x, xb) >= -1e-9);
    }
}

TEST_CASE("log-det linearization residual at a scalar pair") {
    // x = 2, x_bar = 1: ln 2 - (ln 1 - <1, 1/2 - 1>) = ln 2 - 1/2.
    Eigen::MatrixXcd x(1, 1), xb(1, 1);
    x(0, 0) = 2.0;
    xb(0, 0) = 1.0;
    CHECK(check_inequality_in2(x, xb) == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-12));
    CHECK(check_inequality_in2(xb, xb) == doctest::Approx(0.0));
}

TEST_CASE("scalar log bound residual is nonnegative over a grid") {
    for (double z = 0.05; z <= 20.0; z += 0.05)
        for (double zb = 0.05; zb <= 20.0; zb += 0.05)
            CHECK(check_inequality_zf8(z, zb) >= -1e-12);
    CHECK(check_inequality_zf8(1.0, 1.0) == doctest::Approx(0.0));
}
