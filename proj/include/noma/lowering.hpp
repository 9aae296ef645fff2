#ifndef NOMA_LOWERING_HPP
#define NOMA_LOWERING_HPP

#include "noma/conic.hpp"
#include "noma/config.hpp"
#include "noma/surrogate.hpp"

namespace noma {

enum class SubproblemKind { Qp, Sdp, Soc };

struct SubproblemParams {
    double power_budget = 1.0; // watts, per BS
    double qos_nats = 0.0;     // per-UE threshold
};

/// A conic program together with its variable layout. Variables are the
/// realified precoders (Re then Im, column-major, one contiguous run per UE),
/// followed by one rate slack per message (throughput programs) or the ratio
/// variable tau (feasibility programs), followed by internal epigraph
/// variables where the lowering needs them.
struct LoweredProgram {
    ConicProgram program;
    int n_cells = 0, users_per_cell = 0, tx_antennas = 0, streams = 0;
    int v_base = 0;
    std::vector<int> slack_vars; // per task; empty in feasibility programs
    int tau_var = -1;
    bool trivially_feasible = false; // feasibility program, all thresholds zero
    TaskList tasks;

    PrecoderSet unpack(const Eigen::VectorXd& x) const;
};

LoweredProgram lower_qp_subproblem(const QpMinorantSet& set, const Channels& channels,
                                   const SubproblemParams& params);
LoweredProgram lower_sdp_subproblem(const SdpMinorantSet& set, const Channels& channels,
                                    const SubproblemParams& params);
LoweredProgram lower_soc_subproblem(const SocMinorantSet& set, const Channels& channels,
                                    const SubproblemParams& params);

/// Max-min QoS ratio programs: maximize tau subject to minorant >= tau * r
/// for every message/decoder row with r > 0. All-zero thresholds short-circuit
/// to trivially_feasible.
LoweredProgram lower_feasibility_subproblem(const QpMinorantSet& set, const Channels& channels,
                                            const SubproblemParams& params);
LoweredProgram lower_feasibility_subproblem(const SdpMinorantSet& set, const Channels& channels,
                                            const SubproblemParams& params);
LoweredProgram lower_feasibility_subproblem(const SocMinorantSet& set, const Channels& channels,
                                            const SubproblemParams& params);

struct ProblemDims {
    int n = 0;
    int m = 0;
};

/// Closed-form problem sizes for the paired (2-UE cluster) formulation,
/// cross-checked against a freshly constructed program's metadata; a mismatch
/// throws std::logic_error.
ProblemDims problem_dims(const NetworkConfig& config, SubproblemKind kind);

} // namespace noma

#endif
