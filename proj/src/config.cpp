#include "noma/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace noma {

double noise_power(const NetworkConfig& config) {
    const double dbm = config.noise_density_dbm_hz + 10.0 * std::log10(config.bandwidth_hz);
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double power_budget_watts(const NetworkConfig& config) {
    return std::pow(10.0, (config.power_budget_dbm - 30.0) / 10.0);
}

double qos_threshold_nats(const NetworkConfig& config) {
    return config.qos_threshold_bps_hz * std::log(2.0);
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

NetworkConfig config_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    NetworkConfig c;
    read_field(j, "n_cells", c.n_cells);
    read_field(j, "pairs_per_cell", c.pairs_per_cell);
    read_field(j, "tx_antennas", c.tx_antennas);
    read_field(j, "rx_antennas", c.rx_antennas);
    read_field(j, "streams", c.streams);
    read_field(j, "ue_classes", c.ue_classes);
    read_field(j, "power_budget_dbm", c.power_budget_dbm);
    read_field(j, "qos_threshold_bps_hz", c.qos_threshold_bps_hz);
    read_field(j, "noise_density_dbm_hz", c.noise_density_dbm_hz);
    read_field(j, "bandwidth_hz", c.bandwidth_hz);
    read_field(j, "cell_radius_m", c.cell_radius_m);
    read_field(j, "center_radius_m", c.center_radius_m);
    read_field(j, "middle_radius_m", c.middle_radius_m);
    read_field(j, "min_bs_ue_distance_m", c.min_bs_ue_distance_m);
    read_field(j, "shadowing_std_db", c.shadowing_std_db);
    read_field(j, "inter_site_distance_m", c.inter_site_distance_m);
    read_field(j, "seed", c.seed);
    if (j.contains("users_per_cell")) {
        const int u = j.at("users_per_cell").get<int>();
        if (u != c.users_per_cell())
            throw std::invalid_argument("users_per_cell inconsistent with pairs_per_cell");
    }
    c.validate();
    return c;
}

NetworkConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string config_to_json_text(const NetworkConfig& c) {
    nlohmann::json j;
    j["n_cells"] = c.n_cells;
    j["pairs_per_cell"] = c.pairs_per_cell;
    j["users_per_cell"] = c.users_per_cell();
    j["tx_antennas"] = c.tx_antennas;
    j["rx_antennas"] = c.rx_antennas;
    j["streams"] = c.streams;
    j["ue_classes"] = c.ue_classes;
    j["power_budget_dbm"] = c.power_budget_dbm;
    j["qos_threshold_bps_hz"] = c.qos_threshold_bps_hz;
    j["noise_density_dbm_hz"] = c.noise_density_dbm_hz;
    j["bandwidth_hz"] = c.bandwidth_hz;
    j["cell_radius_m"] = c.cell_radius_m;
    j["center_radius_m"] = c.center_radius_m;
    j["middle_radius_m"] = c.middle_radius_m;
    j["min_bs_ue_distance_m"] = c.min_bs_ue_distance_m;
    j["shadowing_std_db"] = c.shadowing_std_db;
    j["inter_site_distance_m"] = c.inter_site_distance_m;
    j["seed"] = c.seed;
    return j.dump(2);
}

} // namespace noma
