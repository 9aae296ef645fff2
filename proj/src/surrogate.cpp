#include "noma/surrogate.hpp"

#include <algorithm>
#include <cmath>

namespace noma {

namespace {

Eigen::MatrixXcd hermitian_inverse(const Eigen::MatrixXcd& m_raw) {
    const Eigen::MatrixXcd m = 0.5 * (m_raw + m_raw.adjoint());
    Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("covariance is not positive definite");
    return llt.solve(Eigen::MatrixXcd::Identity(m.rows(), m.cols()));
}

// PSD square root with a small negative-eigenvalue allowance, relative to the
// matrix scale (the weight matrices inherit the conditioning of the channel).
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& d_raw, double tol) {
    const Eigen::MatrixXcd d = 0.5 * (d_raw + d_raw.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d);
    if (es.info() != Eigen::Success) throw std::domain_error("eigendecomposition failed");
    const double scale = std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
    if (es.eigenvalues().minCoeff() < -tol * scale)
        throw std::domain_error("weight matrix is not positive semidefinite");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

// The exclusion set of a decoder: every (s,l) outside `removed`.
std::vector<UeRef> exclusion_complement(const Channels& channels,
                                        const std::vector<UeRef>& removed) {
    std::vector<UeRef> out;
    for (int s = 0; s < channels.n_cells; ++s)
        for (int l = 0; l < channels.users_per_cell; ++l)
            if (std::find(removed.begin(), removed.end(), UeRef{s, l}) == removed.end())
                out.emplace_back(s, l);
    return out;
}

// Like `removed` but with the message itself kept out and everything else intact:
// the set whose complement enters M_incl (only SIC-canceled messages removed).
std::vector<UeRef> canceled_only(const std::vector<UeRef>& removed, int msg_cell, int msg_user) {
    std::vector<UeRef> out;
    for (const auto& r : removed)
        if (!(r.first == msg_cell && r.second == msg_user)) out.push_back(r);
    return out;
}

} // namespace

QpMinorantSet qp_minorants(const Channels& channels, const PrecoderSet& anchor, double sigma2,
                           const TaskList& tasks) {
    QpMinorantSet set;
    set.anchor = anchor;
    set.tasks = tasks;
    set.terms.resize(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        for (const auto& dec : task.decoders) {
            const Eigen::MatrixXcd m_excl = interference_covariance(
                channels, anchor, sigma2, dec.rx_cell, dec.rx_user, dec.removed);
            const auto canceled = canceled_only(dec.removed, task.cell, task.user);

            const Eigen::MatrixXcd& h = channels.at(task.cell, dec.rx_cell, dec.rx_user);
            const Eigen::MatrixXcd hv = h * anchor.at(task.cell, task.user);
            const Eigen::MatrixXcd m_excl_inv = hermitian_inverse(m_excl);

            QpMinorant m;
            m.var_cell = task.cell;
            m.var_user = task.user;
            m.rx_cell = dec.rx_cell;
            m.rx_user = dec.rx_user;
            m.lin = h.adjoint() * (m_excl_inv * hv);
            const double rate = logdet_rate_nats(channels, anchor, sigma2, task.cell, task.user, dec);
            m.a = rate - (hv.adjoint() * m_excl_inv * hv).trace().real();
            // Woodbury form of M_excl^{-1} - M_incl^{-1}: with B = M_excl^{-1} H Vk
            // and C = I + Vk^H H^H B, the difference equals B C^{-1} B^H, which is
            // positive semidefinite by construction (a direct subtraction of the
            // two inverses loses that property once M is badly conditioned).
            const Eigen::MatrixXcd b = m_excl_inv * hv;
            const Eigen::MatrixXcd c =
                Eigen::MatrixXcd::Identity(hv.cols(), hv.cols()) + hv.adjoint() * b;
            const Eigen::MatrixXcd d =
                b * Eigen::LLT<Eigen::MatrixXcd>(0.5 * (c + c.adjoint())).solve(b.adjoint());
            m.weight_sqrt = psd_sqrt(d, kPsdTolerance);
            m.noise_term = sigma2 * d.trace().real();
            m.included = exclusion_complement(channels, canceled);
            set.terms[t].push_back(std::move(m));
        }
    }
    return set;
}

double eval_qp_minorant(const QpMinorant& m, const Channels& channels, const PrecoderSet& v) {
    double val = m.a + 2.0 * (m.lin.adjoint() * v.at(m.var_cell, m.var_user)).trace().real();
    for (const auto& [s, l] : m.included) {
        const Eigen::MatrixXcd w = m.weight_sqrt * channels.at(s, m.rx_cell, m.rx_user) * v.at(s, l);
        val -= w.squaredNorm();
    }
    return val - m.noise_term;
}

SdpMinorantSet sdp_minorants(const Channels& channels, const PrecoderSet& anchor, double sigma2,
                             const TaskList& tasks) {
    SdpMinorantSet set;
    set.anchor = anchor;
    set.tasks = tasks;
    set.terms.resize(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        for (const auto& dec : task.decoders) {
            const Eigen::MatrixXcd m_excl = interference_covariance(
                channels, anchor, sigma2, dec.rx_cell, dec.rx_user, dec.removed);
            const Eigen::MatrixXcd& h = channels.at(task.cell, dec.rx_cell, dec.rx_user);
            const Eigen::MatrixXcd hv = h * anchor.at(task.cell, task.user);
            const Eigen::MatrixXcd m_excl_inv = hermitian_inverse(m_excl);

            SdpMinorant m;
            m.var_cell = task.cell;
            m.var_user = task.user;
            m.rx_cell = dec.rx_cell;
            m.rx_user = dec.rx_user;
            m.t_map = m_excl_inv * hv;
            m.c_mat = Eigen::MatrixXcd::Identity(hv.cols(), hv.cols()) + hv.adjoint() * m.t_map;
            m.c_sqrt = psd_sqrt(m.c_mat, kPsdTolerance);
            m.excl_included = exclusion_complement(channels, dec.removed);
            m.sigma2 = sigma2;
            m.anchor_rate = logdet_rate_nats(channels, anchor, sigma2, task.cell, task.user, dec);
            set.terms[t].push_back(std::move(m));
        }
    }
    return set;
}

Eigen::MatrixXcd sdp_trust_region(const SdpMinorant& m, const Channels& channels,
                                  const PrecoderSet& anchor, const PrecoderSet& v) {
    const int nr = channels.rx_antennas;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nr, nr);
    for (const auto& [s, l] : m.excl_included) {
        const Eigen::MatrixXcd& h = channels.at(s, m.rx_cell, m.rx_user);
        const Eigen::MatrixXcd hv = h * v.at(s, l);
        const Eigen::MatrixXcd hvk = h * anchor.at(s, l);
        out.noalias() += hv * hvk.adjoint() + hvk * hv.adjoint() - hvk * hvk.adjoint();
    }
    return out;
}

Eigen::MatrixXcd sdp_q_map(const SdpMinorant& m, const Channels& channels,
                           const PrecoderSet& anchor, const PrecoderSet& v) {
    const Eigen::MatrixXcd& h = channels.at(m.var_cell, m.rx_cell, m.rx_user);
    const Eigen::MatrixXcd hv = h * v.at(m.var_cell, m.var_user);
    const Eigen::MatrixXcd lmap = sdp_trust_region(m, channels, anchor, v);
    const int nr = lmap.rows();
    return m.t_map.adjoint() * hv + hv.adjoint() * m.t_map -
           m.t_map.adjoint() *
               (lmap + m.sigma2 * Eigen::MatrixXcd::Identity(nr, nr)) * m.t_map;
}

double eval_sdp_minorant(const SdpMinorant& m, const Channels& channels, const PrecoderSet& anchor,
                         const PrecoderSet& v) {
    {
        const Eigen::MatrixXcd lmap = sdp_trust_region(m, channels, anchor, v);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (lmap + lmap.adjoint()));
        if (es.eigenvalues().minCoeff() < -kPsdTolerance)
            throw TrustRegionError("iterate left the trust region of an SDP minorant");
    }
    // The lower bound is evaluated with the exact interference covariance in
    // the bilinear map. Substituting the affine covariance bound used by the
    // lowered program here would flip an inequality and overestimate the rate
    // away from the anchor, so that form stays confined to the subproblem.
    const Eigen::MatrixXcd& h = channels.at(m.var_cell, m.rx_cell, m.rx_user);
    const Eigen::MatrixXcd hv = h * v.at(m.var_cell, m.var_user);
    const int nr = channels.rx_antennas;
    Eigen::MatrixXcd mv = m.sigma2 * Eigen::MatrixXcd::Identity(nr, nr);
    for (const auto& [s, l] : m.excl_included) {
        const Eigen::MatrixXcd sv = channels.at(s, m.rx_cell, m.rx_user) * v.at(s, l);
        mv.noalias() += sv * sv.adjoint();
    }
    const Eigen::MatrixXcd q =
        m.t_map.adjoint() * hv + hv.adjoint() * m.t_map - m.t_map.adjoint() * mv * m.t_map;
    const int lcols = q.rows();
    const Eigen::MatrixXcd g =
        Eigen::MatrixXcd::Identity(lcols, lcols) + 0.5 * (q + q.adjoint());
    Eigen::LLT<Eigen::MatrixXcd> llt(g);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("I + Q(V) is not positive definite");
    const Eigen::MatrixXcd g_inv = llt.solve(Eigen::MatrixXcd::Identity(lcols, lcols));
    return m.anchor_rate + lcols - (m.c_mat * g_inv).trace().real();
}

double soc_a(double z_bar) { return std::log1p(z_bar) + z_bar / (z_bar + 1.0); }

double soc_b(double z_bar) { return z_bar * z_bar / (z_bar + 1.0); }

SocMinorantSet soc_minorants(const Channels& channels, const PrecoderSet& anchor, double sigma2,
                             const TaskList& tasks) {
    if (channels.rx_antennas != 1 || anchor.streams != 1)
        throw std::invalid_argument("SOC minorants require Nr = 1 and L = 1");

    PrecoderSet rotated = rotate_direct_products(channels, anchor);
    // A zero direct product leaves the bound's denominator degenerate at the
    // anchor; nudge the precoder along the strongest channel direction.
    for (int i = 0; i < rotated.n_cells; ++i) {
        for (int j = 0; j < rotated.users_per_cell; ++j) {
            const Eigen::MatrixXcd& h = channels.at(i, i, j);
            if (std::abs((h * rotated.at(i, j))(0, 0)) > 0.0) continue;
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h, Eigen::ComputeFullV);
            rotated.at(i, j) += 1e-6 * svd.matrixV().col(0);
        }
    }
    rotated = rotate_direct_products(channels, rotated);

    SocMinorantSet set;
    set.anchor = rotated;
    set.tasks = tasks;
    set.terms.resize(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        for (const auto& dec : task.decoders) {
            SocMinorant m;
            m.var_cell = task.cell;
            m.var_user = task.user;
            m.rx_cell = dec.rx_cell;
            m.rx_user = dec.rx_user;
            m.own_decoder = dec.rx_cell == task.cell && dec.rx_user == task.user;
            m.anchor_prod =
                (channels.at(task.cell, dec.rx_cell, dec.rx_user) * rotated.at(task.cell, task.user))(0, 0);
            m.excl_included = exclusion_complement(channels, dec.removed);
            m.sigma2 = sigma2;
            const double num =
                m.own_decoder ? m.anchor_prod.real() * m.anchor_prod.real() : std::norm(m.anchor_prod);
            const double den = interference_covariance(channels, rotated, sigma2, dec.rx_cell,
                                                       dec.rx_user, dec.removed)(0, 0)
                                   .real();
            m.z_bar = num / den;
            m.a_val = soc_a(m.z_bar);
            m.b_val = soc_b(m.z_bar);
            set.terms[t].push_back(std::move(m));
        }
    }
    return set;
}

double soc_phi(const SocMinorant& m, const Channels& channels, const PrecoderSet& v) {
    const std::complex<double> hv =
        (channels.at(m.var_cell, m.rx_cell, m.rx_user) * v.at(m.var_cell, m.var_user))(0, 0);
    if (m.own_decoder)
        return m.anchor_prod.real() * (2.0 * hv.real() - m.anchor_prod.real());
    return 2.0 * (m.anchor_prod * std::conj(hv)).real() - std::norm(m.anchor_prod);
}

double eval_soc_minorant(const SocMinorant& m, const Channels& channels, const PrecoderSet& v) {
    const double phi = soc_phi(m, channels, v);
    if (!(phi > 0.0)) throw TrustRegionError("iterate left the trust region of a SOC minorant");
    const double m_excl =
        interference_covariance(channels, v, m.sigma2, m.rx_cell, m.rx_user,
                                // complement of excl_included
                                [&] {
                                    std::vector<UeRef> removed;
                                    for (int s = 0; s < channels.n_cells; ++s)
                                        for (int l = 0; l < channels.users_per_cell; ++l)
                                            if (std::find(m.excl_included.begin(), m.excl_included.end(),
                                                          UeRef{s, l}) == m.excl_included.end())
                                                removed.emplace_back(s, l);
                                    return removed;
                                }())(0, 0)
            .real();
    return m.a_val - m.b_val * m_excl / phi;
}

double check_inequality_in1(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& v_bar,
                            const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& x_bar) {
    const Eigen::MatrixXcd xi = hermitian_inverse(x);
    const Eigen::MatrixXcd xbi = hermitian_inverse(x_bar);
    const Eigen::MatrixXcd lhs = v.adjoint() * xi * v;
    const Eigen::MatrixXcd rhs = v_bar.adjoint() * xbi * v + v.adjoint() * xbi * v_bar -
                                 v_bar.adjoint() * xbi * x * xbi * v_bar;
    const Eigen::MatrixXcd diff = lhs - rhs;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (diff + diff.adjoint()));
    return es.eigenvalues().minCoeff();
}

double check_inequality_in2(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& x_bar) {
    auto logdet = [](const Eigen::MatrixXcd& m) {
        Eigen::LLT<Eigen::MatrixXcd> llt(0.5 * (m + m.adjoint()));
        if (llt.info() != Eigen::Success) throw std::domain_error("matrix is not positive definite");
        double v = 0.0;
        const Eigen::MatrixXcd l = llt.matrixL();
        for (int i = 0; i < l.rows(); ++i) v += 2.0 * std::log(l(i, i).real());
        return v;
    };
    const Eigen::MatrixXcd xi = hermitian_inverse(x);
    const Eigen::MatrixXcd xbi = hermitian_inverse(x_bar);
    return logdet(x) - logdet(x_bar) + (x_bar * (xi - xbi)).trace().real();
}

double check_inequality_zf8(double z, double z_bar) {
    return std::log1p(z) - soc_a(z_bar) + soc_b(z_bar) / z;
}

} // namespace noma
