#ifndef NOMA_RATES_HPP
#define NOMA_RATES_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "noma/network.hpp"

namespace noma {

/// The decision variable: one Nt x L complex precoder per UE.
struct PrecoderSet {
    int n_cells = 0;
    int users_per_cell = 0;
    int tx_antennas = 0;
    int streams = 0;
    std::vector<Eigen::MatrixXcd> v;

    const Eigen::MatrixXcd& at(int cell, int user) const {
        return v[static_cast<std::size_t>(cell) * users_per_cell + user];
    }
    Eigen::MatrixXcd& at(int cell, int user) {
        return v[static_cast<std::size_t>(cell) * users_per_cell + user];
    }

    static PrecoderSet zero(int n_cells, int users_per_cell, int tx_antennas, int streams);
};

using UeRef = std::pair<int, int>; // (cell, user)

/// One decoder of one message: who listens and which messages are absent
/// from its interference (the message itself plus everything already
/// canceled by SIC or known non-causally).
struct DecoderTerm {
    int rx_cell = 0;
    int rx_user = 0;
    std::vector<UeRef> removed;
};

/// A message and everyone who must decode it. The achieved throughput of the
/// message is the minimum of its per-decoder rates.
struct MessageTask {
    int cell = 0;
    int user = 0;
    std::vector<DecoderTerm> decoders;
};

using TaskList = std::vector<MessageTask>;

enum class DecodeMode {
    Sic,  // NOMA: message k decoded by cluster members k..m-1
    Comp, // every message decoded by its own UE, all interference kept
    Dpc   // genie encoding: UE (i,j) knows messages (i,j'), j' > j
};

TaskList make_tasks(const ClusterPlan& plan, int n_cells, int users_per_cell, DecodeMode mode);

/// Interference-plus-noise covariance at UE (rx_cell, rx_user) with the
/// signals in `removed` absent: sum over the remaining (s,l) of
/// H V V^H H^H plus sigma2 * I.
Eigen::MatrixXcd interference_covariance(const Channels& channels, const PrecoderSet& v,
                                         double sigma2, int rx_cell, int rx_user,
                                         const std::vector<UeRef>& removed);

/// ln|I_L + V^H H^H M^{-1} H V| in nats, for message (cell,user) at the given decoder.
double logdet_rate_nats(const Channels& channels, const PrecoderSet& v, double sigma2,
                        int msg_cell, int msg_user, const DecoderTerm& decoder);

struct UeRateEntry {
    int cell = 0;
    int user = 0;
    double rate_nats = 0.0;                 // min over decoders
    std::vector<double> decoder_rates_nats; // aligned with the task's decoder list
};

struct RateReport {
    std::vector<UeRateEntry> entries; // one per message
    std::vector<double> per_cell_nats;
    double total_nats = 0.0;

    double rate_nats(int cell, int user) const;
    double rate_bps_hz(int cell, int user) const { return rate_nats(cell, user) / std::log(2.0); }
    double total_bps_hz() const { return total_nats / std::log(2.0); }
};

RateReport evaluate_rates(const Channels& channels, const PrecoderSet& v, double sigma2,
                          const TaskList& tasks);

RateReport noma_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                      double sigma2);
RateReport comp_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                      double sigma2);
RateReport dpc_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                     double sigma2);
RateReport cluster_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                         double sigma2);

/// MISO specialization (Nr = 1, L = 1): phase-rotates each direct product and
/// evaluates the scalar SINR forms. Agrees with noma_rates on the same input.
RateReport miso_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                      double sigma2);

/// Phase rotation making every direct product H_{i,i,j} V_{i,j} real and nonnegative.
PrecoderSet rotate_direct_products(const Channels& channels, const PrecoderSet& v);

/// Per-BS transmit power, sum of squared Frobenius norms.
std::vector<double> sum_power(const PrecoderSet& v);

/// Deterministic starting point: each column is a dominant right singular
/// vector of the direct channel, scaled so every BS spends its full budget
/// split equally across its UEs.
PrecoderSet seed_precoder(const Channels& channels, double power_budget, int streams);

/// All covariance variants at one UE of a paired (size-2) plan.
struct CovarianceBundle {
    Eigen::MatrixXcd m_full;       // nothing removed
    Eigen::MatrixXcd m_minus_pair; // the pair's edge message removed
    Eigen::MatrixXcd m_minus_both; // both messages of the pair removed
    Eigen::MatrixXcd m_comp;       // own message removed
    Eigen::MatrixXcd m_dpc;        // own-cell messages with index >= own removed
};

CovarianceBundle covariance_bundle(const Channels& channels, const PrecoderSet& v,
                                   const ClusterPlan& plan, double sigma2, int cell, int user);

} // namespace noma

#endif
