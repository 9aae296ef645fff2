#include "noma/lowering.hpp"

#include <cmath>
#include <stdexcept>

#include "noma/network.hpp"

namespace noma {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// Row index within a realified PSD block of order pr (column-major lower triangle).
int svec_index(int pr, int r, int c) {
    return c * pr - c * (c - 1) / 2 + (r - c);
}

struct Builder {
    ConicProgram prog;
    const Channels& ch;
    int nt, l, upc, n;
    int per_ue; // 2 * nt * l reals
    int v_base = 0;

    Builder(const Channels& channels, int streams)
        : ch(channels),
          nt(channels.tx_antennas),
          l(streams),
          upc(channels.users_per_cell),
          n(channels.n_cells),
          per_ue(2 * channels.tx_antennas * streams) {
        v_base = prog.add_variables(n * upc * per_ue);
        prog.n_reported += n * upc * nt * l; // complex precoder entries
    }

    int ue(int cell, int user) const { return cell * upc + user; }
    int re_idx(int cell, int user, int r, int c) const {
        return v_base + ue(cell, user) * per_ue + c * nt + r;
    }
    int im_idx(int cell, int user, int r, int c) const {
        return v_base + ue(cell, user) * per_ue + nt * l + c * nt + r;
    }

    // Slot semantics: cone entry = h_row - G_row * x represents an affine
    // value f0 + sum(coeff * x); so coefficients enter G negated.
    void coeff(int row, int var, double a) { prog.g(row, var, -a); }

    // value += alpha * Re tr(A^H V_{cell,user})
    void add_re_inner(int row, double alpha, const Eigen::MatrixXcd& a, int cell, int user) {
        for (int c = 0; c < l; ++c)
            for (int r = 0; r < nt; ++r) {
                coeff(row, re_idx(cell, user, r, c), alpha * a(r, c).real());
                coeff(row, im_idx(cell, user, r, c), alpha * a(r, c).imag());
            }
    }

    // Writes the complex scalar alpha * (M V_{cell,user})(r,c) into a
    // (real row, imag row) pair; M is rows x nt.
    void add_product_rows(int row_re, int row_im, double alpha, const Eigen::MatrixXcd& m,
                          int cell, int user, int r, int c) {
        for (int t = 0; t < nt; ++t) {
            const std::complex<double> mc = alpha * m(r, t);
            coeff(row_re, re_idx(cell, user, t, c), mc.real());
            coeff(row_re, im_idx(cell, user, t, c), -mc.imag());
            coeff(row_im, re_idx(cell, user, t, c), mc.imag());
            coeff(row_im, im_idx(cell, user, t, c), mc.real());
        }
    }

    // value += alpha * Re{(M V)(r,c)} only.
    void add_product_real(int row, double alpha, const Eigen::MatrixXcd& m, int cell, int user,
                          int r, int c) {
        for (int t = 0; t < nt; ++t) {
            const std::complex<double> mc = alpha * m(r, t);
            coeff(row, re_idx(cell, user, t, c), mc.real());
            coeff(row, im_idx(cell, user, t, c), -mc.imag());
        }
    }

    void add_power_blocks(double power_budget) {
        for (int i = 0; i < n; ++i) {
            const int base = prog.add_block(ConeType::Soc, 1 + upc * per_ue);
            prog.h_at(base, std::sqrt(power_budget));
            int row = base + 1;
            for (int j = 0; j < upc; ++j)
                for (int k = 0; k < per_ue; ++k)
                    coeff(row++, v_base + ue(i, j) * per_ue + k, 1.0);
            prog.m_reported += 1;
        }
    }
};

// Hermitian-affine PSD block: complex order p embedded as a real PSD block of
// order 2p via [Re, -Im; Im, Re]. Constants accumulate locally and flush once.
struct HermBlock {
    Builder& b;
    int base, p, pr;
    Eigen::MatrixXcd constant;

    HermBlock(Builder& builder, int order)
        : b(builder), p(order), pr(2 * order), constant(Eigen::MatrixXcd::Zero(order, order)) {
        base = b.prog.add_block(ConeType::Psd, pr);
    }

    double embed_entry(const Eigen::MatrixXcd& m, int r, int c) const {
        const bool rb = r >= p, cb = c >= p;
        const std::complex<double> v = m(r % p, c % p);
        if (rb == cb) return v.real();
        return rb ? v.imag() : -v.imag();
    }

    // M += x_var * (dm + dm^H)
    void add_var(int var, const Eigen::MatrixXcd& dm) {
        const Eigen::MatrixXcd dh = dm + dm.adjoint();
        for (int c = 0; c < pr; ++c)
            for (int r = c; r < pr; ++r) {
                const double v = embed_entry(dh, r, c);
                if (v == 0.0) continue;
                b.prog.g(base + svec_index(pr, r, c), var, -(r == c ? v : v * kSqrt2));
            }
    }

    // Convenience: every variable of precoder (cell,user) with derivative
    // a_col * row_c(B), i.e. the term A V B (+ Hermitian transpose).
    void add_sandwich(const Eigen::MatrixXcd& a, int cell, int user, const Eigen::MatrixXcd& bm,
                      int row_off, int col_off) {
        const std::complex<double> im(0.0, 1.0);
        Eigen::MatrixXcd dm = Eigen::MatrixXcd::Zero(p, p);
        for (int t = 0; t < b.nt; ++t)
            for (int c = 0; c < b.l; ++c) {
                dm.setZero();
                dm.block(row_off, col_off, a.rows(), bm.cols()) = a.col(t) * bm.row(c);
                add_var(b.re_idx(cell, user, t, c), dm);
                dm.block(row_off, col_off, a.rows(), bm.cols()) = im * a.col(t) * bm.row(c);
                add_var(b.im_idx(cell, user, t, c), dm);
            }
    }

    // `constant` must be Hermitian when this is called.
    void flush_constant() {
        for (int c = 0; c < pr; ++c)
            for (int r = c; r < pr; ++r) {
                const double v = embed_entry(constant, r, c);
                b.prog.h_at(base + svec_index(pr, r, c), r == c ? v : v * kSqrt2);
            }
    }
};

// ---- QP ----

void add_qp_row(Builder& b, const QpMinorant& m, double rhs_const, int rhs_var, double rhs_coeff) {
    // minorant(V) >= rhs  with  minorant = a - noise + 2 Re<lin,V> - ||q||^2,
    // rhs = rhs_const + rhs_coeff * x_{rhs_var}. Rotated-cone form:
    // ||[2q; A-1]|| <= A+1 with A = minorant-affine-part - rhs.
    const Eigen::Index nr = m.weight_sqrt.rows();
    int qlen = 0;
    for (std::size_t t = 0; t < m.included.size(); ++t) qlen += 2 * static_cast<int>(nr) * b.l;
    const int base = b.prog.add_block(ConeType::Soc, 1 + qlen + 1);

    auto fill_affine = [&](int row, double shift) {
        b.prog.h_at(row, m.a - m.noise_term - rhs_const + shift);
        b.add_re_inner(row, 2.0, m.lin, m.var_cell, m.var_user);
        if (rhs_var >= 0) b.coeff(row, rhs_var, -rhs_coeff);
    };
    fill_affine(base, 1.0);
    int row = base + 1;
    for (const auto& [s, lu] : m.included) {
        const Eigen::MatrixXcd mw = m.weight_sqrt * b.ch.at(s, m.rx_cell, m.rx_user);
        for (int c = 0; c < b.l; ++c)
            for (int r = 0; r < nr; ++r) {
                b.add_product_rows(row, row + 1, 2.0, mw, s, lu, r, c);
                row += 2;
            }
    }
    fill_affine(row, -1.0);
    b.prog.m_reported += 1;
}

// ---- SDP ----

void add_sdp_blocks(Builder& b, const SdpMinorant& m, const PrecoderSet& anchor, int u_base,
                    double rhs_const, int rhs_var, double rhs_coeff) {
    const int l = b.l;
    const int nr = b.ch.rx_antennas;

    // Epigraph row: anchor_rate + L - tr(U) - rhs >= 0.
    const int row = b.prog.add_block(ConeType::NonNeg, 1);
    b.prog.h_at(row, m.anchor_rate + l - rhs_const);
    for (int dgi = 0; dgi < l; ++dgi) b.coeff(row, u_base + dgi, -1.0);
    if (rhs_var >= 0) b.coeff(row, rhs_var, -rhs_coeff);
    b.prog.m_reported += 1;

    // Schur block [[U, C^{1/2}], [C^{1/2}, I + Q(V)]] >= 0, complex order 2L.
    {
        HermBlock hb(b, 2 * l);
        hb.constant.block(0, l, l, l) = m.c_sqrt;
        hb.constant.block(l, 0, l, l) = m.c_sqrt.adjoint();
        Eigen::MatrixXcd qconst = Eigen::MatrixXcd::Identity(l, l) -
                                  m.sigma2 * (m.t_map.adjoint() * m.t_map);
        for (const auto& [s, lu] : m.excl_included) {
            const Eigen::MatrixXcd k =
                m.t_map.adjoint() * (b.ch.at(s, m.rx_cell, m.rx_user) * anchor.at(s, lu));
            qconst += k * k.adjoint();
        }
        hb.constant.block(l, l, l, l) = qconst;
        hb.flush_constant();

        // U variables: diag (L), then Re/Im of strict lower triangle.
        int uv = u_base;
        Eigen::MatrixXcd dm = Eigen::MatrixXcd::Zero(2 * l, 2 * l);
        for (int d = 0; d < l; ++d) {
            dm.setZero();
            dm(d, d) = 0.5; // add_var hermitianizes (doubles the diagonal)
            hb.add_var(uv++, dm);
        }
        for (int c = 0; c < l; ++c)
            for (int r = c + 1; r < l; ++r) {
                dm.setZero();
                dm(r, c) = 1.0;
                hb.add_var(uv++, dm);
            }
        const std::complex<double> im(0.0, 1.0);
        for (int c = 0; c < l; ++c)
            for (int r = c + 1; r < l; ++r) {
                dm.setZero();
                dm(r, c) = im;
                hb.add_var(uv++, dm);
            }

        // Q(V) linear terms in the bottom-right block.
        hb.add_sandwich(m.t_map.adjoint() * b.ch.at(m.var_cell, m.rx_cell, m.rx_user), m.var_cell,
                        m.var_user, Eigen::MatrixXcd::Identity(l, l), l, l);
        for (const auto& [s, lu] : m.excl_included) {
            const Eigen::MatrixXcd a = m.t_map.adjoint() * b.ch.at(s, m.rx_cell, m.rx_user);
            const Eigen::MatrixXcd k = a * anchor.at(s, lu); // L x L
            hb.add_sandwich(-a, s, lu, k.adjoint(), l, l);
        }
    }

    // Trust region L(V) >= 0, complex order Nr.
    {
        HermBlock hb(b, nr);
        for (const auto& [s, lu] : m.excl_included) {
            const Eigen::MatrixXcd& h = b.ch.at(s, m.rx_cell, m.rx_user);
            const Eigen::MatrixXcd c = h * anchor.at(s, lu); // Nr x L
            hb.constant -= c * c.adjoint();
            hb.add_sandwich(h, s, lu, c.adjoint(), 0, 0);
        }
        hb.flush_constant();
        b.prog.m_reported += nr;
    }
}

// ---- SOC ----

// value += alpha * phi(V) of a scalar minorant (affine in V).
void add_phi(Builder& b, const SocMinorant& m, int row, double alpha, double& h_accum) {
    const Eigen::MatrixXcd& h = b.ch.at(m.var_cell, m.rx_cell, m.rx_user);
    if (m.own_decoder) {
        const double k = m.anchor_prod.real();
        h_accum += alpha * (-k * k);
        b.add_product_real(row, alpha * 2.0 * k, h, m.var_cell, m.var_user, 0, 0);
        return;
    }
    h_accum += alpha * (-std::norm(m.anchor_prod));
    for (int t = 0; t < b.nt; ++t) {
        const std::complex<double> ht = h(0, t);
        b.coeff(row, b.re_idx(m.var_cell, m.var_user, t, 0),
                alpha * 2.0 * (m.anchor_prod.real() * ht.real() + m.anchor_prod.imag() * ht.imag()));
        b.coeff(row, b.im_idx(m.var_cell, m.var_user, t, 0),
                alpha * 2.0 * (m.anchor_prod.imag() * ht.real() - m.anchor_prod.real() * ht.imag()));
    }
}

void add_soc_epigraph(Builder& b, const SocMinorant& m, double rhs_const, int rhs_var,
                      double rhs_coeff) {
    // b_val * M(V) <= (a_val - rhs) * phi(V), hyperbolic form
    // ||[2u; x - y]|| <= x + y with x = a_val - rhs, y = phi(V).
    const int e = static_cast<int>(m.excl_included.size());
    const int base = b.prog.add_block(ConeType::Soc, 1 + (2 * e + 1) + 1);
    const double sb = std::sqrt(m.b_val);

    auto fill_xy = [&](int row, double ysign) {
        // x +/- y with x = a_val - rhs, y = phi(V)
        double h0 = m.a_val - rhs_const;
        if (rhs_var >= 0) b.coeff(row, rhs_var, -rhs_coeff);
        add_phi(b, m, row, ysign, h0);
        b.prog.h_at(row, h0);
    };

    fill_xy(base, 1.0);
    int row = base + 1;
    for (const auto& [s, lu] : m.excl_included) {
        b.add_product_rows(row, row + 1, 2.0 * sb, b.ch.at(s, m.rx_cell, m.rx_user), s, lu, 0, 0);
        row += 2;
    }
    b.prog.h_at(row++, 2.0 * sb * std::sqrt(m.sigma2));
    fill_xy(row, -1.0);
    b.prog.m_reported += 1;
}

void add_soc_qos(Builder& b, const SocMinorant& m, double qos_nats) {
    const double gain2 = std::expm1(qos_nats);
    const double gain = std::sqrt(gain2);
    if (m.own_decoder) {
        // Exact row: Re{HV} >= sqrt(e^r - 1) * sqrt(M_excl(V));
        // degenerates to Re{HV} >= 0 when r = 0.
        if (gain == 0.0) {
            const int row = b.prog.add_block(ConeType::NonNeg, 1);
            b.add_product_real(row, 1.0, b.ch.at(m.var_cell, m.rx_cell, m.rx_user), m.var_cell,
                               m.var_user, 0, 0);
            b.prog.m_reported += 1;
            return;
        }
        const int e = static_cast<int>(m.excl_included.size());
        const int base = b.prog.add_block(ConeType::Soc, 1 + 2 * e + 1);
        b.add_product_real(base, 1.0, b.ch.at(m.var_cell, m.rx_cell, m.rx_user), m.var_cell,
                           m.var_user, 0, 0);
        int row = base + 1;
        for (const auto& [s, lu] : m.excl_included) {
            b.add_product_rows(row, row + 1, gain, b.ch.at(s, m.rx_cell, m.rx_user), s, lu, 0, 0);
            row += 2;
        }
        b.prog.h_at(row, gain * std::sqrt(m.sigma2));
        b.prog.m_reported += 1;
        return;
    }
    // Cross-decoder row: the written Re-form is not invariant under the
    // per-iteration phase change of variables (it can cut off the anchor), so
    // the exact |HV|^2 >= (e^r-1) M is inner-approximated through the same
    // anchor-tight linearization phi used by the rate bounds:
    //   (e^r - 1) * M_excl(V) <= phi(V), touching whenever the anchor meets QoS.
    if (gain2 == 0.0) {
        const int row = b.prog.add_block(ConeType::NonNeg, 1);
        double h0 = 0.0;
        add_phi(b, m, row, 1.0, h0);
        b.prog.h_at(row, h0);
        b.prog.m_reported += 1;
        return;
    }
    const int e = static_cast<int>(m.excl_included.size());
    const int base = b.prog.add_block(ConeType::Soc, 1 + (2 * e + 1) + 1);
    double h_top = 1.0, h_bot = -1.0;
    add_phi(b, m, base, 1.0, h_top);
    b.prog.h_at(base, h_top);
    int row = base + 1;
    for (const auto& [s, lu] : m.excl_included) {
        b.add_product_rows(row, row + 1, 2.0 * gain, b.ch.at(s, m.rx_cell, m.rx_user), s, lu, 0, 0);
        row += 2;
    }
    b.prog.h_at(row++, 2.0 * gain * std::sqrt(m.sigma2));
    add_phi(b, m, row, 1.0, h_bot);
    b.prog.h_at(row, h_bot);
    b.prog.m_reported += 1;
}

// Shared scaffolding: slacks + objective for throughput programs, tau for
// feasibility programs.
template <typename Set>
void setup_slots(Builder& b, LoweredProgram& out, const Set& set, const SubproblemParams& params,
                 bool feasibility) {
    out.tasks = set.tasks;
    if (feasibility) {
        out.tau_var = b.prog.add_variables(1, -1.0);
        b.prog.n_reported += 1;
        return;
    }
    for (const auto& task : set.tasks) {
        const int t = b.prog.add_variables(1, -1.0);
        out.slack_vars.push_back(t);
        if (task.decoders.size() > 1) b.prog.n_reported += 1;
        // QoS on the message rate: t >= qos.
        const int row = b.prog.add_block(ConeType::NonNeg, 1);
        b.prog.h_at(row, -params.qos_nats);
        b.coeff(row, t, 1.0);
    }
}

void finalize(Builder& b, LoweredProgram& out, const Channels& ch, int streams) {
    out.program = std::move(b.prog);
    out.n_cells = ch.n_cells;
    out.users_per_cell = ch.users_per_cell;
    out.tx_antennas = ch.tx_antennas;
    out.streams = streams;
    out.v_base = b.v_base;
}

template <typename Set, typename AddRows>
LoweredProgram build(const Set& set, const Channels& channels, const SubproblemParams& params,
                     int streams, bool feasibility, AddRows&& add_rows) {
    LoweredProgram out;
    if (feasibility && params.qos_nats <= 0.0) {
        out.trivially_feasible = true;
        out.tasks = set.tasks;
        return out;
    }
    Builder b(channels, streams);
    setup_slots(b, out, set, params, feasibility);
    b.add_power_blocks(params.power_budget);
    for (std::size_t t = 0; t < set.tasks.size(); ++t) {
        for (std::size_t d = 0; d < set.terms[t].size(); ++d) {
            const int rhs_var = feasibility ? out.tau_var : out.slack_vars[t];
            const double rhs_coeff = feasibility ? params.qos_nats : 1.0;
            add_rows(b, set.terms[t][d], rhs_var, rhs_coeff);
        }
    }
    finalize(b, out, channels, streams);
    return out;
}

} // namespace

PrecoderSet LoweredProgram::unpack(const Eigen::VectorXd& x) const {
    PrecoderSet v = PrecoderSet::zero(n_cells, users_per_cell, tx_antennas, streams);
    const int per_ue = 2 * tx_antennas * streams;
    for (int i = 0; i < n_cells; ++i)
        for (int j = 0; j < users_per_cell; ++j) {
            const int base = v_base + (i * users_per_cell + j) * per_ue;
            for (int c = 0; c < streams; ++c)
                for (int r = 0; r < tx_antennas; ++r)
                    v.at(i, j)(r, c) = {x[base + c * tx_antennas + r],
                                        x[base + tx_antennas * streams + c * tx_antennas + r]};
        }
    return v;
}

LoweredProgram lower_qp_subproblem(const QpMinorantSet& set, const Channels& channels,
                                   const SubproblemParams& params) {
    return build(set, channels, params, set.anchor.streams, false,
                 [&](Builder& b, const QpMinorant& m, int rhs_var, double rhs_coeff) {
                     add_qp_row(b, m, 0.0, rhs_var, rhs_coeff);
                 });
}

LoweredProgram lower_sdp_subproblem(const SdpMinorantSet& set, const Channels& channels,
                                    const SubproblemParams& params) {
    LoweredProgram out;
    Builder b(channels, set.anchor.streams);
    setup_slots(b, out, set, params, false);
    b.add_power_blocks(params.power_budget);
    const int l = set.anchor.streams;
    for (std::size_t t = 0; t < set.tasks.size(); ++t)
        for (const auto& m : set.terms[t]) {
            const int u_base = b.prog.add_variables(l * l);
            add_sdp_blocks(b, m, set.anchor, u_base, 0.0, out.slack_vars[t], 1.0);
        }
    finalize(b, out, channels, set.anchor.streams);
    return out;
}

LoweredProgram lower_soc_subproblem(const SocMinorantSet& set, const Channels& channels,
                                    const SubproblemParams& params) {
    LoweredProgram out;
    Builder b(channels, 1);
    out.tasks = set.tasks;
    for (const auto& task : set.tasks) {
        (void)task;
        const int t = b.prog.add_variables(1, -1.0);
        out.slack_vars.push_back(t);
        if (task.decoders.size() > 1) b.prog.n_reported += 1;
    }
    b.add_power_blocks(params.power_budget);
    for (std::size_t t = 0; t < set.tasks.size(); ++t)
        for (const auto& m : set.terms[t]) {
            add_soc_epigraph(b, m, 0.0, out.slack_vars[t], 1.0);
            add_soc_qos(b, m, params.qos_nats);
        }
    finalize(b, out, channels, 1);
    return out;
}

LoweredProgram lower_feasibility_subproblem(const QpMinorantSet& set, const Channels& channels,
                                            const SubproblemParams& params) {
    return build(set, channels, params, set.anchor.streams, true,
                 [&](Builder& b, const QpMinorant& m, int rhs_var, double rhs_coeff) {
                     add_qp_row(b, m, 0.0, rhs_var, rhs_coeff);
                 });
}

LoweredProgram lower_feasibility_subproblem(const SdpMinorantSet& set, const Channels& channels,
                                            const SubproblemParams& params) {
    LoweredProgram out;
    if (params.qos_nats <= 0.0) {
        out.trivially_feasible = true;
        out.tasks = set.tasks;
        return out;
    }
    Builder b(channels, set.anchor.streams);
    setup_slots(b, out, set, params, true);
    b.add_power_blocks(params.power_budget);
    const int l = set.anchor.streams;
    for (std::size_t t = 0; t < set.tasks.size(); ++t)
        for (const auto& m : set.terms[t]) {
            const int u_base = b.prog.add_variables(l * l);
            add_sdp_blocks(b, m, set.anchor, u_base, 0.0, out.tau_var, params.qos_nats);
        }
    finalize(b, out, channels, set.anchor.streams);
    return out;
}

LoweredProgram lower_feasibility_subproblem(const SocMinorantSet& set, const Channels& channels,
                                            const SubproblemParams& params) {
    LoweredProgram out;
    if (params.qos_nats <= 0.0) {
        out.trivially_feasible = true;
        out.tasks = set.tasks;
        return out;
    }
    Builder b(channels, 1);
    out.tasks = set.tasks;
    out.tau_var = b.prog.add_variables(1, -1.0);
    b.prog.n_reported += 1;
    b.add_power_blocks(params.power_budget);
    for (std::size_t t = 0; t < set.tasks.size(); ++t)
        for (const auto& m : set.terms[t])
            add_soc_epigraph(b, m, 0.0, out.tau_var, params.qos_nats);
    finalize(b, out, channels, 1);
    return out;
}

ProblemDims problem_dims(const NetworkConfig& config, SubproblemKind kind) {
    NetworkConfig cfg = config;
    if (kind == SubproblemKind::Soc) {
        cfg.rx_antennas = 1;
        cfg.streams = 1;
    }
    const int nn = cfg.n_cells, kk = cfg.pairs_per_cell;
    const int ntl = cfg.tx_antennas * cfg.streams;

    ProblemDims dims;
    dims.n = kk * nn * (2 * ntl + 1);
    switch (kind) {
        case SubproblemKind::Qp: dims.m = nn * (1 + 3 * kk); break;
        case SubproblemKind::Sdp: dims.m = nn * (1 + 3 * kk) + 3 * nn * kk * cfg.rx_antennas; break;
        case SubproblemKind::Soc: dims.m = nn * (1 + 6 * kk); break;
    }

    // Cross-check against a constructed program.
    const Topology topo = build_topology(cfg, cfg.seed);
    const Channels ch = sample_channels(topo, cfg, cfg.seed);
    const ClusterPlan plan = pair_users(topo, cfg, 2, cfg.seed);
    const TaskList tasks = make_tasks(plan, cfg.n_cells, cfg.users_per_cell(), DecodeMode::Sic);
    const PrecoderSet anchor = seed_precoder(ch, power_budget_watts(cfg), cfg.streams);
    const double sigma2 = noise_power(cfg);
    SubproblemParams params{power_budget_watts(cfg), qos_threshold_nats(cfg)};

    LoweredProgram lp;
    switch (kind) {
        case SubproblemKind::Qp:
            lp = lower_qp_subproblem(qp_minorants(ch, anchor, sigma2, tasks), ch, params);
            break;
        case SubproblemKind::Sdp:
            lp = lower_sdp_subproblem(sdp_minorants(ch, anchor, sigma2, tasks), ch, params);
            break;
        case SubproblemKind::Soc:
            lp = lower_soc_subproblem(soc_minorants(ch, anchor, sigma2, tasks), ch, params);
            break;
    }
    if (lp.program.n_reported != dims.n || lp.program.m_reported != dims.m)
        throw std::logic_error("problem size metadata disagrees with closed-form counts");
    return dims;
}

} // namespace noma
