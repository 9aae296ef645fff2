#ifndef NOMA_OPTIMIZER_HPP
#define NOMA_OPTIMIZER_HPP

#include <string>
#include <vector>

#include "noma/config.hpp"
#include "noma/ipm.hpp"
#include "noma/lowering.hpp"
#include "noma/rates.hpp"

namespace noma {

enum class Algorithm { Qp, Sdp, Soc, CompQp, DpcQp };

Algorithm algorithm_from_string(const std::string& name);
const char* to_string(Algorithm a);

struct OptimizerSettings {
    Algorithm algorithm = Algorithm::Qp;
    double epsilon = 1e-3; // relative objective tolerance
    int max_iterations = 100;
    int max_init_iterations = 50;
    bool cluster_generalization = false; // informational; clusters come from the plan
    IpmOptions backend;
};

enum class RunStatus { Converged, IterationCap, InitFailed, NumericalFailure };

const char* to_string(RunStatus s);

struct IterationTrace {
    std::vector<double> objectives_nats; // P(V^k), starting at the initial point
    std::vector<double> init_taus;       // QoS ratio per feasibility iteration
    std::vector<double> iteration_seconds;
    PrecoderSet final_precoders;
    RateReport final_report;
    RunStatus status = RunStatus::NumericalFailure;
    double final_relative_change = 0.0;
    double final_certificate_residual = 0.0; // subproblem optimality residual at exit

    double objective_bps_hz() const;
    std::string to_json() const;
};

struct InitResult {
    PrecoderSet v;
    std::vector<double> taus;
    bool success = false;
};

/// Feasible-point generation: deterministic seed precoder, then max-min QoS
/// ratio iterations until the ratio reaches 1.
InitResult initialize(const Channels& channels, const ClusterPlan& plan,
                      const NetworkConfig& config, const OptimizerSettings& settings);

/// The outer successive-approximation loop: build minorants at the current
/// iterate, lower, solve, move. Handles qp/sdp/soc and the comp-qp/dpc-qp
/// baselines (which differ only in their decoder structure).
IterationTrace run_path_following(const Channels& channels, const ClusterPlan& plan,
                                  const NetworkConfig& config, const OptimizerSettings& settings);

/// Same machinery restricted to the baseline algorithms.
IterationTrace run_baseline(const Channels& channels, const ClusterPlan& plan,
                            const NetworkConfig& config, const OptimizerSettings& settings);

/// Proxy stationarity gap of a finished run: the larger of the final relative
/// objective increment and the final subproblem certificate residual.
double kkt_gap(const IterationTrace& trace);

} // namespace noma

#endif
