#include "noma/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noma {

PrecoderSet PrecoderSet::zero(int n_cells, int users_per_cell, int tx_antennas, int streams) {
    PrecoderSet p;
    p.n_cells = n_cells;
    p.users_per_cell = users_per_cell;
    p.tx_antennas = tx_antennas;
    p.streams = streams;
    p.v.assign(static_cast<std::size_t>(n_cells) * users_per_cell,
               Eigen::MatrixXcd::Zero(tx_antennas, streams));
    return p;
}

TaskList make_tasks(const ClusterPlan& plan, int n_cells, int users_per_cell, DecodeMode mode) {
    TaskList tasks;
    if (mode == DecodeMode::Sic) {
        for (std::size_t c = 0; c < plan.cluster_users.size(); ++c) {
            const int cell = plan.cluster_cell[c];
            const auto& order = plan.cluster_users[c];
            if (order.empty()) throw std::invalid_argument("empty cluster");
            for (std::size_t k = 0; k < order.size(); ++k) {
                MessageTask task;
                task.cell = cell;
                task.user = order[k];
                std::vector<UeRef> removed;
                for (std::size_t c2 = 0; c2 <= k; ++c2) removed.emplace_back(cell, order[c2]);
                for (std::size_t l = k; l < order.size(); ++l)
                    task.decoders.push_back({cell, order[l], removed});
                tasks.push_back(std::move(task));
            }
        }
    } else {
        for (int i = 0; i < n_cells; ++i) {
            for (int j = 0; j < users_per_cell; ++j) {
                MessageTask task;
                task.cell = i;
                task.user = j;
                std::vector<UeRef> removed;
                removed.emplace_back(i, j);
                if (mode == DecodeMode::Dpc)
                    for (int j2 = j + 1; j2 < users_per_cell; ++j2) removed.emplace_back(i, j2);
                task.decoders.push_back({i, j, std::move(removed)});
                tasks.push_back(std::move(task));
            }
        }
    }
    return tasks;
}

Eigen::MatrixXcd interference_covariance(const Channels& channels, const PrecoderSet& v,
                                         double sigma2, int rx_cell, int rx_user,
                                         const std::vector<UeRef>& removed) {
    const int nr = channels.rx_antennas;
    Eigen::MatrixXcd m = sigma2 * Eigen::MatrixXcd::Identity(nr, nr);
    for (int s = 0; s < channels.n_cells; ++s) {
        for (int l = 0; l < channels.users_per_cell; ++l) {
            if (std::find(removed.begin(), removed.end(), UeRef{s, l}) != removed.end()) continue;
            const Eigen::MatrixXcd hv = channels.at(s, rx_cell, rx_user) * v.at(s, l);
            m.noalias() += hv * hv.adjoint();
        }
    }
    return m;
}

namespace {

// ln|I + S^H M^{-1} S| via Cholesky; M is symmetrized first.
double logdet_capacity(const Eigen::MatrixXcd& m_raw, const Eigen::MatrixXcd& signal) {
    const Eigen::MatrixXcd m = 0.5 * (m_raw + m_raw.adjoint());
    Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("interference covariance is not positive definite");
    const Eigen::MatrixXcd w = llt.matrixL().solve(signal);
    const Eigen::MatrixXcd g =
        Eigen::MatrixXcd::Identity(signal.cols(), signal.cols()) + w.adjoint() * w;
    Eigen::LLT<Eigen::MatrixXcd> lltg(g);
    if (lltg.info() != Eigen::Success)
        throw std::domain_error("capacity Gram matrix is not positive definite");
    double rate = 0.0;
    const Eigen::MatrixXcd lg = lltg.matrixL();
    for (int i = 0; i < lg.rows(); ++i) rate += 2.0 * std::log(lg(i, i).real());
    return rate;
}

} // namespace

double logdet_rate_nats(const Channels& channels, const PrecoderSet& v, double sigma2,
                        int msg_cell, int msg_user, const DecoderTerm& decoder) {
    const Eigen::MatrixXcd m =
        interference_covariance(channels, v, sigma2, decoder.rx_cell, decoder.rx_user, decoder.removed);
    const Eigen::MatrixXcd signal =
        channels.at(msg_cell, decoder.rx_cell, decoder.rx_user) * v.at(msg_cell, msg_user);
    return logdet_capacity(m, signal);
}

double RateReport::rate_nats(int cell, int user) const {
    for (const auto& e : entries)
        if (e.cell == cell && e.user == user) return e.rate_nats;
    throw std::out_of_range("no rate entry for requested UE");
}

RateReport evaluate_rates(const Channels& channels, const PrecoderSet& v, double sigma2,
                          const TaskList& tasks) {
    RateReport report;
    report.per_cell_nats.assign(channels.n_cells, 0.0);
    for (const auto& task : tasks) {
        UeRateEntry entry;
        entry.cell = task.cell;
        entry.user = task.user;
        double min_rate = std::numeric_limits<double>::infinity();
        for (const auto& dec : task.decoders) {
            const double r = logdet_rate_nats(channels, v, sigma2, task.cell, task.user, dec);
            entry.decoder_rates_nats.push_back(r);
            min_rate = std::min(min_rate, r);
        }
        entry.rate_nats = min_rate;
        report.per_cell_nats[task.cell] += min_rate;
        report.total_nats += min_rate;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

RateReport noma_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                      double sigma2) {
    return evaluate_rates(channels, v, sigma2,
                          make_tasks(plan, channels.n_cells, channels.users_per_cell, DecodeMode::Sic));
}

RateReport cluster_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                         double sigma2) {
    return noma_rates(channels, v, plan, sigma2);
}

RateReport comp_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                      double sigma2) {
    return evaluate_rates(channels, v, sigma2,
                          make_tasks(plan, channels.n_cells, channels.users_per_cell, DecodeMode::Comp));
}

RateReport dpc_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                     double sigma2) {
    return evaluate_rates(channels, v, sigma2,
                          make_tasks(plan, channels.n_cells, channels.users_per_cell, DecodeMode::Dpc));
}

PrecoderSet rotate_direct_products(const Channels& channels, const PrecoderSet& v) {
    PrecoderSet out = v;
    for (int i = 0; i < v.n_cells; ++i) {
        for (int j = 0; j < v.users_per_cell; ++j) {
            const std::complex<double> d = (channels.at(i, i, j) * v.at(i, j))(0, 0);
            if (std::abs(d) > 0.0) out.at(i, j) *= std::conj(d) / std::abs(d);
        }
    }
    return out;
}

RateReport miso_rates(const Channels& channels, const PrecoderSet& v, const ClusterPlan& plan,
                      double sigma2) {
    if (channels.rx_antennas != 1 || v.streams != 1)
        throw std::invalid_argument("miso_rates requires Nr = 1 and L = 1");
    const PrecoderSet rotated = rotate_direct_products(channels, v);
    const TaskList tasks =
        make_tasks(plan, channels.n_cells, channels.users_per_cell, DecodeMode::Sic);

    RateReport report;
    report.per_cell_nats.assign(channels.n_cells, 0.0);
    for (const auto& task : tasks) {
        UeRateEntry entry;
        entry.cell = task.cell;
        entry.user = task.user;
        double min_rate = std::numeric_limits<double>::infinity();
        for (const auto& dec : task.decoders) {
            const std::complex<double> hv =
                (channels.at(task.cell, dec.rx_cell, dec.rx_user) * rotated.at(task.cell, task.user))(0, 0);
            const bool own = dec.rx_cell == task.cell && dec.rx_user == task.user;
            const double num = own ? hv.real() * hv.real() : std::norm(hv);
            const double den =
                interference_covariance(channels, rotated, sigma2, dec.rx_cell, dec.rx_user, dec.removed)(0, 0)
                    .real();
            const double r = std::log1p(num / den);
            entry.decoder_rates_nats.push_back(r);
            min_rate = std::min(min_rate, r);
        }
        entry.rate_nats = min_rate;
        report.per_cell_nats[task.cell] += min_rate;
        report.total_nats += min_rate;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::vector<double> sum_power(const PrecoderSet& v) {
    std::vector<double> p(v.n_cells, 0.0);
    for (int i = 0; i < v.n_cells; ++i)
        for (int j = 0; j < v.users_per_cell; ++j) p[i] += v.at(i, j).squaredNorm();
    return p;
}

PrecoderSet seed_precoder(const Channels& channels, double power_budget, int streams) {
    PrecoderSet v = PrecoderSet::zero(channels.n_cells, channels.users_per_cell,
                                      channels.tx_antennas, streams);
    const double col_norm =
        std::sqrt(power_budget / (channels.users_per_cell * static_cast<double>(streams)));
    for (int i = 0; i < channels.n_cells; ++i) {
        for (int j = 0; j < channels.users_per_cell; ++j) {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(channels.at(i, i, j), Eigen::ComputeFullV);
            for (int c = 0; c < streams; ++c)
                v.at(i, j).col(c) = col_norm * svd.matrixV().col(c % svd.matrixV().cols());
        }
    }
    return v;
}

CovarianceBundle covariance_bundle(const Channels& channels, const PrecoderSet& v,
                                   const ClusterPlan& plan, double sigma2, int cell, int user) {
    if (plan.cluster_size != 2)
        throw std::invalid_argument("covariance_bundle is defined for paired (size-2) plans");
    const int partner = plan.pair_of(cell, user, channels.users_per_cell);
    if (partner < 0) throw std::invalid_argument("UE has no pairing partner");

    // The edge message of the pair is the one decoded first.
    int edge_user = -1;
    for (std::size_t c = 0; c < plan.cluster_users.size(); ++c) {
        if (plan.cluster_cell[c] != cell) continue;
        const auto& us = plan.cluster_users[c];
        if (std::find(us.begin(), us.end(), user) != us.end()) edge_user = us.front();
    }
    if (edge_user < 0) throw std::invalid_argument("UE not found in any cluster");

    CovarianceBundle b;
    b.m_full = interference_covariance(channels, v, sigma2, cell, user, {});
    b.m_minus_pair = interference_covariance(channels, v, sigma2, cell, user, {{cell, edge_user}});
    b.m_minus_both =
        interference_covariance(channels, v, sigma2, cell, user, {{cell, user}, {cell, partner}});
    b.m_comp = interference_covariance(channels, v, sigma2, cell, user, {{cell, user}});
    std::vector<UeRef> dpc_removed;
    for (int j2 = user; j2 < channels.users_per_cell; ++j2) dpc_removed.emplace_back(cell, j2);
    b.m_dpc = interference_covariance(channels, v, sigma2, cell, user, dpc_removed);
    return b;
}

} // namespace noma
