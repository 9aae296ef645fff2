#include "noma/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace noma {

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "qp") return Algorithm::Qp;
    if (name == "sdp") return Algorithm::Sdp;
    if (name == "soc") return Algorithm::Soc;
    if (name == "comp-qp") return Algorithm::CompQp;
    if (name == "dpc-qp") return Algorithm::DpcQp;
    throw std::invalid_argument("unknown algorithm: " + name);
}

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Qp: return "qp";
        case Algorithm::Sdp: return "sdp";
        case Algorithm::Soc: return "soc";
        case Algorithm::CompQp: return "comp-qp";
        case Algorithm::DpcQp: return "dpc-qp";
    }
    return "?";
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "converged";
        case RunStatus::IterationCap: return "iteration-cap";
        case RunStatus::InitFailed: return "init-failed";
        case RunStatus::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

double IterationTrace::objective_bps_hz() const {
    return objectives_nats.empty() ? 0.0 : objectives_nats.back() / std::log(2.0);
}

std::string IterationTrace::to_json() const {
    nlohmann::json j;
    j["objectives_nats"] = objectives_nats;
    j["init_taus"] = init_taus;
    j["iteration_seconds"] = iteration_seconds;
    j["status"] = to_string(status);
    j["final_relative_change"] = final_relative_change;
    j["final_certificate_residual"] = final_certificate_residual;
    j["objective_bps_hz"] = objective_bps_hz();
    return j.dump(2);
}

double kkt_gap(const IterationTrace& trace) {
    return std::max(trace.final_relative_change, trace.final_certificate_residual);
}

namespace {

constexpr double kInfObjective = std::numeric_limits<double>::infinity();

DecodeMode mode_of(Algorithm a) {
    switch (a) {
        case Algorithm::CompQp: return DecodeMode::Comp;
        case Algorithm::DpcQp: return DecodeMode::Dpc;
        default: return DecodeMode::Sic;
    }
}

struct Instance {
    Channels channels; // normalized so the noise power is 1
    TaskList tasks;
    SubproblemParams params;
    OptimizerSettings settings;
};

Instance make_instance(const Channels& raw, const ClusterPlan& plan, const NetworkConfig& config,
                       const OptimizerSettings& settings) {
    Instance inst{raw.scaled(1.0 / std::sqrt(noise_power(config))),
                  make_tasks(plan, raw.n_cells, raw.users_per_cell, mode_of(settings.algorithm)),
                  {power_budget_watts(config), qos_threshold_nats(config)},
                  settings};
    if (settings.algorithm == Algorithm::Soc &&
        (raw.rx_antennas != 1 || config.streams != 1))
        throw std::invalid_argument("soc algorithm requires a MISO instance (Nr = 1, L = 1)");
    return inst;
}

// Solves one subproblem; returns false when the backend result is unusable.
bool solve_subproblem(const Instance& inst, const PrecoderSet& anchor, bool feasibility,
                      PrecoderSet& out, PrecoderSet& anchor_used, double& objective,
                      double& residual, bool& trivially_feasible) {
    LoweredProgram lp;
    anchor_used = anchor;
    switch (inst.settings.algorithm) {
        case Algorithm::Sdp: {
            const auto set = sdp_minorants(inst.channels, anchor, 1.0, inst.tasks);
            lp = feasibility ? lower_feasibility_subproblem(set, inst.channels, inst.params)
                             : lower_sdp_subproblem(set, inst.channels, inst.params);
            break;
        }
        case Algorithm::Soc: {
            const auto set = soc_minorants(inst.channels, anchor, 1.0, inst.tasks);
            anchor_used = set.anchor;
            lp = feasibility ? lower_feasibility_subproblem(set, inst.channels, inst.params)
                             : lower_soc_subproblem(set, inst.channels, inst.params);
            break;
        }
        default: {
            const auto set = qp_minorants(inst.channels, anchor, 1.0, inst.tasks);
            lp = feasibility ? lower_feasibility_subproblem(set, inst.channels, inst.params)
                             : lower_qp_subproblem(set, inst.channels, inst.params);
            break;
        }
    }
    if (lp.trivially_feasible) {
        trivially_feasible = true;
        out = anchor_used;
        objective = 0.0;
        residual = 0.0;
        return true;
    }
    trivially_feasible = false;
    IpmBackend backend(inst.settings.backend);
    const Solution sol = backend.solve(lp.program);
    residual = sol.certificate_residual;
    // On badly conditioned instances the backend residuals floor around
    // 1e-5; such solutions are still feasible to working precision and the
    // outer loop verifies true-rate ascent, so accept them.
    const bool usable = sol.status == SolveStatus::Optimal ||
                        (sol.status == SolveStatus::IterationLimit &&
                         sol.certificate_residual <= 1e-3);
    if (!usable) return false;
    out = lp.unpack(sol.x);
    objective = -sol.objective; // programs minimize the negated target
    return true;
}

// Numerical projection: the backend meets the power rows to ~1e-8; the outer
// invariant is 1e-9, so overshooting cells are scaled back onto the ball.
void project_power(PrecoderSet& v, double budget) {
    const std::vector<double> p = sum_power(v);
    for (int i = 0; i < v.n_cells; ++i)
        if (p[i] > budget) {
            const double f = std::sqrt(budget / p[i]);
            for (int j = 0; j < v.users_per_cell; ++j) v.at(i, j) *= f;
        }
}

double total_objective(const Instance& inst, const PrecoderSet& v) {
    return evaluate_rates(inst.channels, v, 1.0, inst.tasks).total_nats;
}

double min_rate_nats(const Instance& inst, const PrecoderSet& v) {
    const RateReport report = evaluate_rates(inst.channels, v, 1.0, inst.tasks);
    double mn = report.entries.front().rate_nats;
    for (const auto& e : report.entries) mn = std::min(mn, e.rate_nats);
    return mn;
}

PrecoderSet blend(const PrecoderSet& base, const PrecoderSet& next, double theta) {
    PrecoderSet out = base;
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = (1.0 - theta) * base.v[i] + theta * next.v[i];
    return out;
}

} // namespace

InitResult initialize(const Channels& channels, const ClusterPlan& plan,
                      const NetworkConfig& config, const OptimizerSettings& settings) {
    const Instance inst = make_instance(channels, plan, config, settings);
    InitResult res;
    res.v = seed_precoder(inst.channels, inst.params.power_budget,
                          settings.algorithm == Algorithm::Soc ? 1 : config.streams);
    const double qos = inst.params.qos_nats;
    if (qos <= 0.0) {
        res.success = true;
        return res;
    }
    int stalls = 0;
    for (int it = 0; it < settings.max_init_iterations; ++it) {
        const double current = min_rate_nats(inst, res.v);
        if (current >= qos) {
            res.success = true;
            return res;
        }
        PrecoderSet next, anchor_used;
        double tau = 0.0, residual = 0.0;
        bool trivial = false;
        if (!solve_subproblem(inst, res.v, true, next, anchor_used, tau, residual, trivial))
            return res;
        project_power(next, inst.params.power_budget);
        res.taus.push_back(tau);
        // The subproblem maximizes a surrogate of the worst rate; step along
        // its direction only as far as the exact worst rate actually improves
        // (the SDP surrogate in particular can overshoot far from the anchor).
        PrecoderSet best = next;
        double best_rate = min_rate_nats(inst, next);
        for (double theta : {0.5, 0.25}) {
            const PrecoderSet cand = blend(res.v, next, theta);
            const double r = min_rate_nats(inst, cand);
            if (r > best_rate) {
                best_rate = r;
                best = cand;
            }
        }
        if (best_rate <= current + 1e-12) {
            if (++stalls >= 3) break;
            continue;
        }
        stalls = 0;
        res.v = std::move(best);
        if (best_rate >= qos) {
            res.success = true;
            return res;
        }
    }
    res.success = min_rate_nats(inst, res.v) >= qos;
    if (!res.success && settings.algorithm == Algorithm::Sdp) {
        // The matrix-form feasibility phase can stall because its lowered
        // subproblem is not a true bound away from the anchor. Any feasible
        // point is a valid starting iterate regardless of which surrogate
        // found it, so fall back to the quadratic-form phase, whose bound is
        // global.
        OptimizerSettings alt = settings;
        alt.algorithm = Algorithm::Qp;
        InitResult qp_res = initialize(channels, plan, config, alt);
        if (qp_res.success) {
            res.v = std::move(qp_res.v);
            res.taus.insert(res.taus.end(), qp_res.taus.begin(), qp_res.taus.end());
            res.success = true;
        }
    }
    return res;
}

IterationTrace run_path_following(const Channels& channels, const ClusterPlan& plan,
                                  const NetworkConfig& config, const OptimizerSettings& settings) {
    const Instance inst = make_instance(channels, plan, config, settings);
    IterationTrace trace;

    InitResult init = initialize(channels, plan, config, settings);
    trace.init_taus = init.taus;
    if (!init.success) {
        trace.status = RunStatus::InitFailed;
        trace.final_precoders = init.v;
        trace.final_report = evaluate_rates(inst.channels, init.v, 1.0, inst.tasks);
        return trace;
    }

    PrecoderSet v = init.v;
    PrecoderSet v_prev = v;
    double obj = total_objective(inst, v);
    trace.objectives_nats.push_back(obj);
    trace.status = RunStatus::IterationCap;

    const double qos_floor = inst.params.qos_nats - 1e-7;
    // Best exact-objective point along the segment from v to the subproblem
    // solution built at anchor_pt. Fractional steps guard against surrogate
    // overshoot (the matrix surrogate can overestimate away from its anchor);
    // every candidate is vetted against the exact rates, so each choice is as
    // sound as the nominal one. Returns false when the subproblem fails.
    auto try_anchor = [&](const PrecoderSet& anchor_pt, const PrecoderSet& v_cur, PrecoderSet& best,
                          double& best_obj, double& residual) {
        PrecoderSet next, anchor_used;
        double sub_obj = 0.0;
        bool trivial = false;
        if (!solve_subproblem(inst, anchor_pt, false, next, anchor_used, sub_obj, residual, trivial))
            return false;
        project_power(next, inst.params.power_budget);
        best_obj = -kInfObjective;
        for (double theta : {1.0, 0.5, 0.25, 0.125}) {
            PrecoderSet cand = theta == 1.0 ? next : blend(v_cur, next, theta);
            if (min_rate_nats(inst, cand) < qos_floor) continue;
            const double cand_obj = total_objective(inst, cand);
            if (cand_obj > best_obj) {
                best_obj = cand_obj;
                best = std::move(cand);
            }
            if (theta == 1.0 && cand_obj >= obj) break; // valid full step
        }
        return true;
    };

    for (int it = 0; it < settings.max_iterations; ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        // The plain anchor at the iterate drives the termination test, exactly
        // as in the nominal algorithm. When that step is still far from
        // convergence, a second subproblem anchored at the inertial point
        // 2v - v_prev (ahead of the iterate along its direction of travel) is
        // tried as an accelerator: the bounds hold at any anchor, and
        // centering them past the iterate counters the slow geometric tail
        // where plain anchoring crawls along the active QoS surface.
        PrecoderSet plain_best;
        double plain_obj = -kInfObjective, residual = 0.0;
        const bool plain_ok = try_anchor(v, v, plain_best, plain_obj, residual);
        trace.final_certificate_residual = residual;
        if (!plain_ok) {
            trace.iteration_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            trace.status = RunStatus::NumericalFailure;
            break;
        }
        const double rel = std::abs(plain_obj - obj) / std::max(std::abs(obj), 1e-12);
        trace.final_relative_change = rel;
        if (plain_obj < obj) {
            // The exact objective cannot improve further than the subproblem
            // tolerance allows; treat as converged at the previous iterate.
            trace.iteration_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            trace.status = RunStatus::Converged;
            break;
        }
        PrecoderSet accepted = std::move(plain_best);
        double new_obj = plain_obj;
        if (rel > settings.epsilon && it > 0) {
            PrecoderSet inertial_best;
            double inertial_obj = -kInfObjective, inertial_residual = 0.0;
            if (try_anchor(blend(v_prev, v, 2.0), v, inertial_best, inertial_obj,
                           inertial_residual) &&
                inertial_obj > new_obj) {
                accepted = std::move(inertial_best);
                new_obj = inertial_obj;
            }
        }
        trace.iteration_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        v_prev = std::move(v);
        v = std::move(accepted);
        obj = new_obj;
        trace.objectives_nats.push_back(obj);
        if (rel <= settings.epsilon) {
            trace.status = RunStatus::Converged;
            break;
        }
    }
    trace.final_precoders = v;
    trace.final_report = evaluate_rates(inst.channels, v, 1.0, inst.tasks);
    return trace;
}

IterationTrace run_baseline(const Channels& channels, const ClusterPlan& plan,
                            const NetworkConfig& config, const OptimizerSettings& settings) {
    if (settings.algorithm != Algorithm::CompQp && settings.algorithm != Algorithm::DpcQp)
        throw std::invalid_argument("run_baseline expects comp-qp or dpc-qp");
    return run_path_following(channels, plan, config, settings);
}

} // namespace noma
