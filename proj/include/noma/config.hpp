#ifndef NOMA_CONFIG_HPP
#define NOMA_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace noma {

/// All scalar system parameters. Distances are stored in meters and
/// converted to kilometers only inside the path-loss formula.
struct NetworkConfig {
    int n_cells = 3;          // N
    int pairs_per_cell = 2;   // K
    int tx_antennas = 4;      // Nt
    int rx_antennas = 2;      // Nr
    int streams = 2;          // L <= min(Nt, Nr)
    int ue_classes = 2;       // 2: center/edge, 3: center/middle/edge

    double power_budget_dbm = 30.0;       // per BS
    double qos_threshold_bps_hz = 1.0;    // same threshold for every UE
    double noise_density_dbm_hz = -174.0;
    double bandwidth_hz = 20e6;

    double cell_radius_m = 500.0;      // r_o
    double center_radius_m = 150.0;    // r_n
    double middle_radius_m = 250.0;    // r_m, only used when ue_classes == 3
    double min_bs_ue_distance_m = 10.0;
    double shadowing_std_db = 8.0;
    double inter_site_distance_m = 866.0; // ~ sqrt(3) * r_o

    std::uint64_t seed = 1;

    int users_per_cell() const { return 2 * pairs_per_cell; }

    void validate() const {
        if (n_cells < 1) throw std::invalid_argument("n_cells must be >= 1");
        if (pairs_per_cell < 1) throw std::invalid_argument("pairs_per_cell must be >= 1");
        if (tx_antennas < 1 || rx_antennas < 1) throw std::invalid_argument("antenna counts must be >= 1");
        if (streams < 1 || streams > std::min(tx_antennas, rx_antennas))
            throw std::invalid_argument("streams must satisfy 1 <= L <= min(Nt, Nr)");
        if (ue_classes != 2 && ue_classes != 3) throw std::invalid_argument("ue_classes must be 2 or 3");
        if (ue_classes == 3 && users_per_cell() % 3 != 0)
            throw std::invalid_argument("three UE classes require users_per_cell divisible by 3");
        if (!(center_radius_m < cell_radius_m)) throw std::invalid_argument("require r_n < r_o");
        if (ue_classes == 3 && !(center_radius_m < middle_radius_m && middle_radius_m < cell_radius_m))
            throw std::invalid_argument("require r_n < r_m < r_o");
        if (!(min_bs_ue_distance_m < center_radius_m))
            throw std::invalid_argument("min BS-UE distance must be below r_n");
        if (bandwidth_hz <= 0) throw std::invalid_argument("bandwidth must be positive");
        if (qos_threshold_bps_hz < 0) throw std::invalid_argument("QoS threshold must be >= 0");
    }
};

/// sigma^2 in watts from noise density and bandwidth.
double noise_power(const NetworkConfig& config);

double power_budget_watts(const NetworkConfig& config);

/// Threshold converted to nats per channel use.
double qos_threshold_nats(const NetworkConfig& config);

NetworkConfig config_from_json_file(const std::string& path);
NetworkConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const NetworkConfig& config);

} // namespace noma

#endif
