#ifndef NOMA_NETWORK_HPP
#define NOMA_NETWORK_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "noma/config.hpp"

namespace noma {

enum class UeClass { Center, Middle, Edge };

const char* to_string(UeClass c);

struct Topology {
    std::vector<std::array<double, 2>> bs_positions;             // per cell, meters
    std::vector<std::vector<std::array<double, 2>>> ue_positions; // [cell][user]
    std::vector<std::vector<UeClass>> ue_class;                   // [cell][user]

    double bs_ue_distance_m(int cell_of_ue, int user, int bs) const;
};

/// Channel tensor H[s][i][j]: Nr x Nt complex matrix from BS s to UE (i,j).
struct Channels {
    int n_cells = 0;
    int users_per_cell = 0;
    int rx_antennas = 0;
    int tx_antennas = 0;
    std::vector<Eigen::MatrixXcd> h; // flat, index via at()

    const Eigen::MatrixXcd& at(int bs, int cell, int user) const {
        return h[(static_cast<std::size_t>(bs) * n_cells + cell) * users_per_cell + user];
    }
    Eigen::MatrixXcd& at(int bs, int cell, int user) {
        return h[(static_cast<std::size_t>(bs) * n_cells + cell) * users_per_cell + user];
    }

    /// Same fading, every matrix multiplied by `factor`.
    Channels scaled(double factor) const;
};

/// Cluster membership per cell. Users inside a cluster are listed in decode
/// order, weakest class first.
struct ClusterPlan {
    int cluster_size = 2;
    std::vector<int> cluster_cell;              // cell of each cluster
    std::vector<std::vector<int>> cluster_users; // decode order, weakest first
    std::vector<int> pair_map;                   // flat (cell*users_per_cell+user) -> partner user, or -1

    int pair_of(int cell, int user, int users_per_cell) const {
        return pair_map[static_cast<std::size_t>(cell) * users_per_cell + user];
    }
};

enum class ThreeUserGrouping { MoreDistinct, LessDistinct }; // scenario-1 / scenario-2

Topology build_topology(const NetworkConfig& config, std::uint64_t seed);

Channels sample_channels(const Topology& topology, const NetworkConfig& config, std::uint64_t seed);

/// Path loss in dB at distance d (meters converted to km internally),
/// without the shadowing term.
double path_loss_db(double distance_m);

ClusterPlan pair_users(const Topology& topology, const NetworkConfig& config, int cluster_size,
                       std::uint64_t seed,
                       ThreeUserGrouping grouping = ThreeUserGrouping::MoreDistinct);

} // namespace noma

#endif
