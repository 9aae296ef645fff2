#include "noma/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noma/rng.hpp"

namespace noma {

const char* to_string(UeClass c) {
    switch (c) {
        case UeClass::Center: return "center";
        case UeClass::Middle: return "middle";
        case UeClass::Edge: return "edge";
    }
    return "?";
}

double Topology::bs_ue_distance_m(int cell_of_ue, int user, int bs) const {
    const auto& u = ue_positions[cell_of_ue][user];
    const auto& b = bs_positions[bs];
    return std::hypot(u[0] - b[0], u[1] - b[1]);
}

Channels Channels::scaled(double factor) const {
    Channels out = *this;
    for (auto& m : out.h) m *= factor;
    return out;
}

namespace {

// Area-uniform radius in the annulus [inner, outer].
double sample_radius(Rng& rng, double inner, double outer) {
    const double u = rng.uniform();
    return std::sqrt(inner * inner + u * (outer * outer - inner * inner));
}

std::vector<UeClass> class_layout(const NetworkConfig& config) {
    const int n = config.users_per_cell();
    std::vector<UeClass> cls(n);
    if (config.ue_classes == 2) {
        for (int j = 0; j < n; ++j)
            cls[j] = j < config.pairs_per_cell ? UeClass::Center : UeClass::Edge;
    } else {
        const int third = n / 3;
        for (int j = 0; j < n; ++j)
            cls[j] = j < third ? UeClass::Center : (j < 2 * third ? UeClass::Middle : UeClass::Edge);
    }
    return cls;
}

void annulus_for_class(const NetworkConfig& config, UeClass cls, double& inner, double& outer) {
    switch (cls) {
        case UeClass::Center:
            inner = config.min_bs_ue_distance_m;
            outer = config.center_radius_m;
            break;
        case UeClass::Middle:
            inner = config.center_radius_m;
            outer = config.middle_radius_m;
            break;
        case UeClass::Edge:
            inner = config.ue_classes == 3 ? config.middle_radius_m : config.center_radius_m;
            outer = config.cell_radius_m;
            break;
    }
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

} // namespace

Topology build_topology(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, 11));
    const int n = config.n_cells;

    Topology topo;
    topo.bs_positions.resize(n);
    if (n == 1) {
        topo.bs_positions[0] = {0.0, 0.0};
    } else {
        // Regular N-gon with side length equal to the inter-site distance.
        const double circum = config.inter_site_distance_m / (2.0 * std::sin(M_PI / n));
        for (int i = 0; i < n; ++i) {
            const double th = 2.0 * M_PI * i / n;
            topo.bs_positions[i] = {circum * std::cos(th), circum * std::sin(th)};
        }
    }

    const auto cls = class_layout(config);
    topo.ue_positions.assign(n, {});
    topo.ue_class.assign(n, {});
    for (int i = 0; i < n; ++i) {
        topo.ue_positions[i].resize(cls.size());
        topo.ue_class[i] = cls;
        // Edge UEs face the neighboring cells: restrict their angle to a
        // sector of width 2*pi/3 toward the centroid of the other BSs.
        double sector_center = 0.0;
        if (n > 1) {
            double cx = 0.0, cy = 0.0;
            for (int s = 0; s < n; ++s) {
                if (s == i) continue;
                cx += topo.bs_positions[s][0];
                cy += topo.bs_positions[s][1];
            }
            sector_center = std::atan2(cy / (n - 1) - topo.bs_positions[i][1],
                                       cx / (n - 1) - topo.bs_positions[i][0]);
        }
        for (std::size_t j = 0; j < cls.size(); ++j) {
            double inner = 0.0, outer = 0.0;
            annulus_for_class(config, cls[j], inner, outer);
            if (!(inner < outer)) throw std::invalid_argument("empty placement annulus");
            const double r = sample_radius(rng, inner, outer);
            double theta;
            if (cls[j] == UeClass::Edge && n > 1)
                theta = rng.uniform(sector_center - M_PI / 3.0, sector_center + M_PI / 3.0);
            else
                theta = rng.uniform(0.0, 2.0 * M_PI);
            topo.ue_positions[i][j] = {topo.bs_positions[i][0] + r * std::cos(theta),
                                       topo.bs_positions[i][1] + r * std::sin(theta)};
        }
    }
    return topo;
}

double path_loss_db(double distance_m) {
    return 128.1 + 37.6 * std::log10(distance_m / 1000.0);
}

Channels sample_channels(const Topology& topology, const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, 22));
    Channels ch;
    ch.n_cells = config.n_cells;
    ch.users_per_cell = config.users_per_cell();
    ch.rx_antennas = config.rx_antennas;
    ch.tx_antennas = config.tx_antennas;
    ch.h.resize(static_cast<std::size_t>(ch.n_cells) * ch.n_cells * ch.users_per_cell);

    for (int s = 0; s < ch.n_cells; ++s) {
        for (int i = 0; i < ch.n_cells; ++i) {
            for (int j = 0; j < ch.users_per_cell; ++j) {
                const double d = topology.bs_ue_distance_m(i, j, s);
                double pl = path_loss_db(d);
                if (config.shadowing_std_db > 0.0)
                    pl += config.shadowing_std_db * rng.normal();
                const double amp = std::sqrt(std::pow(10.0, -pl / 10.0));
                Eigen::MatrixXcd m(config.rx_antennas, config.tx_antennas);
                for (int r = 0; r < m.rows(); ++r)
                    for (int c = 0; c < m.cols(); ++c) m(r, c) = amp * rng.cnormal();
                ch.at(s, i, j) = std::move(m);
            }
        }
    }
    return ch;
}

namespace {

std::vector<int> users_of_class(const std::vector<UeClass>& cls, UeClass want) {
    std::vector<int> out;
    for (int j = 0; j < static_cast<int>(cls.size()); ++j)
        if (cls[j] == want) out.push_back(j);
    return out;
}

} // namespace

ClusterPlan pair_users(const Topology& topology, const NetworkConfig& config, int cluster_size,
                       std::uint64_t seed, ThreeUserGrouping grouping) {
    config.validate();
    const int n = config.n_cells;
    const int upc = config.users_per_cell();
    if (cluster_size < 1 || upc % cluster_size != 0)
        throw std::invalid_argument("cluster size must divide users_per_cell");

    Rng rng(derive_seed(seed, 33));
    ClusterPlan plan;
    plan.cluster_size = cluster_size;
    plan.pair_map.assign(static_cast<std::size_t>(n) * upc, -1);

    auto add_cluster = [&](int cell, std::vector<int> users) {
        plan.cluster_cell.push_back(cell);
        plan.cluster_users.push_back(std::move(users));
    };

    for (int i = 0; i < n; ++i) {
        const auto& cls = topology.ue_class[i];
        auto centers = users_of_class(cls, UeClass::Center);
        auto middles = users_of_class(cls, UeClass::Middle);
        auto edges = users_of_class(cls, UeClass::Edge);

        if (cluster_size == 1) {
            for (int j = 0; j < upc; ++j) add_cluster(i, {j});
        } else if (cluster_size == upc) {
            // One NOMA cluster per cell, decoded weakest class first.
            std::vector<int> order = edges;
            order.insert(order.end(), middles.begin(), middles.end());
            order.insert(order.end(), centers.begin(), centers.end());
            add_cluster(i, order);
        } else if (cluster_size == 2 && config.ue_classes == 2) {
            shuffle(edges, rng);
            for (std::size_t k = 0; k < centers.size(); ++k) {
                plan.pair_map[static_cast<std::size_t>(i) * upc + centers[k]] = edges[k];
                plan.pair_map[static_cast<std::size_t>(i) * upc + edges[k]] = centers[k];
                add_cluster(i, {edges[k], centers[k]});
            }
        } else if (cluster_size == 2 && config.ue_classes == 3) {
            // One center pairs with a middle UE, the other with an edge UE;
            // the leftover middle and edge UEs form the third cluster.
            if (centers.size() != 2 || middles.size() != 2 || edges.size() != 2)
                throw std::invalid_argument("two-UE clusters with three classes need 2 UEs per class");
            shuffle(centers, rng);
            shuffle(middles, rng);
            shuffle(edges, rng);
            add_cluster(i, {middles[0], centers[0]});
            add_cluster(i, {edges[0], centers[1]});
            add_cluster(i, {edges[1], middles[1]});
            auto pair_up = [&](int a, int b) {
                plan.pair_map[static_cast<std::size_t>(i) * upc + a] = b;
                plan.pair_map[static_cast<std::size_t>(i) * upc + b] = a;
            };
            pair_up(middles[0], centers[0]);
            pair_up(edges[0], centers[1]);
            pair_up(edges[1], middles[1]);
        } else if (cluster_size == 3 && config.ue_classes == 3) {
            if (grouping == ThreeUserGrouping::MoreDistinct) {
                shuffle(centers, rng);
                shuffle(middles, rng);
                shuffle(edges, rng);
                for (std::size_t k = 0; k < centers.size(); ++k)
                    add_cluster(i, {edges[k], middles[k], centers[k]});
            } else {
                // Less distinct channel conditions: group adjacent classes.
                if (centers.size() != 2 || middles.size() != 2 || edges.size() != 2)
                    throw std::invalid_argument("scenario-2 grouping needs 2 UEs per class");
                shuffle(middles, rng);
                add_cluster(i, {middles[0], centers[0], centers[1]});
                add_cluster(i, {edges[0], edges[1], middles[1]});
            }
        } else {
            throw std::invalid_argument("unsupported cluster size for this class layout");
        }
    }
    return plan;
}

} // namespace noma
