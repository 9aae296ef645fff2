#include "noma/ipm.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace noma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int svec_dim(int p) { return p * (p + 1) / 2; }

// Column-major lower triangle, off-diagonal entries scaled by sqrt(2) so that
// svec(A)'svec(B) = <A,B>.
void unsvec(const Eigen::VectorXd& v, int off, Eigen::MatrixXd& m) {
    const double rs2 = 1.0 / std::sqrt(2.0);
    const int p = m.rows();
    int k = off;
    for (int c = 0; c < p; ++c) {
        m(c, c) = v[k++];
        for (int r = c + 1; r < p; ++r) {
            const double x = v[k++] * rs2;
            m(r, c) = x;
            m(c, r) = x;
        }
    }
}

void svec_into(const Eigen::MatrixXd& m, Eigen::VectorXd& v, int off) {
    const double s2 = std::sqrt(2.0);
    const int p = m.rows();
    int k = off;
    for (int c = 0; c < p; ++c) {
        v[k++] = m(c, c);
        for (int r = c + 1; r < p; ++r) v[k++] = m(r, c) * s2;
    }
}

struct Block {
    ConeType type;
    int dim = 0;   // rows in cone space
    int order = 0; // matrix order (psd) or cone dimension (soc)
    int off = 0;
    Eigen::MatrixXd gd;   // dim x n
    Eigen::MatrixXd gram; // soc only: gd'gd

    // scaling state
    Eigen::VectorXd w;    // nonneg
    Eigen::VectorXd wbar; // soc
    Eigen::VectorXd q;    // soc: J wbar
    double eta = 1.0;
    Eigen::MatrixXd r_mat, r_inv; // psd
    Eigen::VectorXd sig;          // psd scaled eigenvalues
    Eigen::VectorXd lam;          // scaled point, length dim
};

Eigen::VectorXd jflip(const Eigen::VectorXd& u) {
    Eigen::VectorXd v = -u;
    v[0] = u[0];
    return v;
}

bool compute_scalings(std::vector<Block>& blocks, const Eigen::VectorXd& s,
                      const Eigen::VectorXd& z) {
    for (auto& b : blocks) {
        const auto sb = s.segment(b.off, b.dim);
        const auto zb = z.segment(b.off, b.dim);
        if (b.type == ConeType::NonNeg) {
            if (sb.minCoeff() <= 0.0 || zb.minCoeff() <= 0.0) return false;
            b.w = (sb.array() / zb.array()).sqrt();
            b.lam = (sb.array() * zb.array()).sqrt();
        } else if (b.type == ConeType::Soc) {
            // Factored form avoids the cancellation of t^2 - |u|^2 near the
            // cone boundary.
            const double sj = (sb[0] - sb.tail(b.dim - 1).norm()) *
                              (sb[0] + sb.tail(b.dim - 1).norm());
            const double zj = (zb[0] - zb.tail(b.dim - 1).norm()) *
                              (zb[0] + zb.tail(b.dim - 1).norm());
            if (sj <= 0.0 || zj <= 0.0 || sb[0] <= 0.0 || zb[0] <= 0.0) return false;
            const double sn = std::sqrt(sj), zn = std::sqrt(zj);
            const Eigen::VectorXd sbar = sb / sn, zbar = zb / zn;
            const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
            const Eigen::VectorXd w = (sbar + jflip(zbar)) / (2.0 * gamma);
            // W is the square root of the hyperbolic Householder H(w): the
            // reflection vector is (w + e) renormalized to unit J-norm.
            b.wbar = w;
            b.wbar[0] += 1.0;
            b.wbar /= std::sqrt(2.0 * (1.0 + w[0]));
            b.q = jflip(b.wbar);
            b.eta = std::sqrt(sn / zn);
            b.lam = b.eta * (2.0 * b.wbar * b.wbar.dot(zb) - jflip(zb));
        } else {
            const int p = b.order;
            Eigen::MatrixXd sm(p, p), zm(p, p);
            unsvec(s, b.off, sm);
            unsvec(z, b.off, zm);
            Eigen::LLT<Eigen::MatrixXd> ls(sm), lz(zm);
            if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
            const Eigen::MatrixXd lsm = ls.matrixL();
            const Eigen::MatrixXd lzm = lz.matrixL();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(lzm.transpose() * lsm,
                                                  Eigen::ComputeFullU | Eigen::ComputeFullV);
            b.sig = svd.singularValues();
            if (b.sig.minCoeff() <= 0.0) return false;
            const Eigen::VectorXd sig_isqrt = b.sig.cwiseSqrt().cwiseInverse();
            b.r_mat = lsm * svd.matrixV() * sig_isqrt.asDiagonal();
            b.r_inv = b.sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                      lsm.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
            b.lam.resize(b.dim);
            Eigen::MatrixXd lm = Eigen::MatrixXd::Zero(p, p);
            lm.diagonal() = b.sig;
            Eigen::VectorXd tmp(b.dim);
            svec_into(lm, tmp, 0);
            b.lam = tmp;
        }
    }
    return true;
}

// W u / W^{-1} u / W'u / W^{-T}u, block-wise over cone space. For the
// nonnegative and second-order cones the scaling is self-adjoint, so the
// transpose flag is ignored there; the PSD congruence U -> R'UR is not, and
// the s-side of every identity needs the adjoint form.
void apply_w(const std::vector<Block>& blocks, const Eigen::VectorXd& u, Eigen::VectorXd& out,
             bool inverse, bool transpose = false) {
    out.resize(u.size());
    for (const auto& b : blocks) {
        const auto ub = u.segment(b.off, b.dim);
        auto ob = out.segment(b.off, b.dim);
        if (b.type == ConeType::NonNeg) {
            ob = inverse ? (ub.array() / b.w.array()).matrix().eval()
                         : (ub.array() * b.w.array()).matrix().eval();
        } else if (b.type == ConeType::Soc) {
            if (inverse)
                ob = (2.0 * b.q * b.q.dot(ub) - jflip(ub)) / b.eta;
            else
                ob = b.eta * (2.0 * b.wbar * b.wbar.dot(ub) - jflip(ub));
        } else {
            Eigen::MatrixXd um(b.order, b.order);
            unsvec(u, b.off, um);
            Eigen::MatrixXd res;
            const Eigen::MatrixXd& r = inverse ? b.r_inv : b.r_mat;
            if (transpose)
                res = r * um * r.transpose();
            else
                res = r.transpose() * um * r;
            res = 0.5 * (res + res.transpose()).eval();
            Eigen::VectorXd tmp(b.dim);
            svec_into(res, tmp, 0);
            ob = tmp;
        }
    }
}

Eigen::VectorXd jordan_mul(const std::vector<Block>& blocks, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& c) {
    Eigen::VectorXd out(a.size());
    for (const auto& b : blocks) {
        const auto ab = a.segment(b.off, b.dim);
        const auto cb = c.segment(b.off, b.dim);
        auto ob = out.segment(b.off, b.dim);
        if (b.type == ConeType::NonNeg) {
            ob = ab.cwiseProduct(cb);
        } else if (b.type == ConeType::Soc) {
            ob[0] = ab.dot(cb);
            ob.tail(b.dim - 1) = ab[0] * cb.tail(b.dim - 1) + cb[0] * ab.tail(b.dim - 1);
        } else {
            Eigen::MatrixXd am(b.order, b.order), cm(b.order, b.order);
            unsvec(a, b.off, am);
            unsvec(c, b.off, cm);
            const Eigen::MatrixXd res = 0.5 * (am * cm + cm * am);
            Eigen::VectorXd tmp(b.dim);
            svec_into(res, tmp, 0);
            ob = tmp;
        }
    }
    return out;
}

// Solves lambda o x = u per block.
Eigen::VectorXd jordan_div_lambda(const std::vector<Block>& blocks, const Eigen::VectorXd& u) {
    Eigen::VectorXd out(u.size());
    for (const auto& b : blocks) {
        const auto ub = u.segment(b.off, b.dim);
        auto ob = out.segment(b.off, b.dim);
        if (b.type == ConeType::NonNeg) {
            ob = ub.cwiseQuotient(b.lam);
        } else if (b.type == ConeType::Soc) {
            const double l0 = b.lam[0];
            const auto l1 = b.lam.tail(b.dim - 1);
            const double det = l0 * l0 - l1.squaredNorm();
            const double x0 = (l0 * ub[0] - l1.dot(ub.tail(b.dim - 1))) / det;
            ob[0] = x0;
            ob.tail(b.dim - 1) = (ub.tail(b.dim - 1) - x0 * l1) / l0;
        } else {
            Eigen::MatrixXd um(b.order, b.order);
            unsvec(u, b.off, um);
            for (int r = 0; r < b.order; ++r)
                for (int c = 0; c < b.order; ++c) um(r, c) *= 2.0 / (b.sig[r] + b.sig[c]);
            Eigen::VectorXd tmp(b.dim);
            svec_into(um, tmp, 0);
            ob = tmp;
        }
    }
    return out;
}

Eigen::VectorXd cone_identity(const std::vector<Block>& blocks, int total) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(total);
    for (const auto& b : blocks) {
        if (b.type == ConeType::NonNeg) {
            e.segment(b.off, b.dim).setOnes();
        } else if (b.type == ConeType::Soc) {
            e[b.off] = 1.0;
        } else {
            Eigen::MatrixXd id = Eigen::MatrixXd::Identity(b.order, b.order);
            Eigen::VectorXd tmp(b.dim);
            svec_into(id, tmp, 0);
            e.segment(b.off, b.dim) = tmp;
        }
    }
    return e;
}

// Largest rho such that the boundary is hit at step 1/rho along u from lambda
// (0 when the whole ray stays interior).
double max_step_coef(const std::vector<Block>& blocks, const Eigen::VectorXd& u) {
    double rho = 0.0;
    for (const auto& b : blocks) {
        const auto ub = u.segment(b.off, b.dim);
        if (b.type == ConeType::NonNeg) {
            for (int i = 0; i < b.dim; ++i) rho = std::max(rho, -ub[i] / b.lam[i]);
        } else if (b.type == ConeType::Soc) {
            const double l0 = b.lam[0];
            const auto l1 = b.lam.tail(b.dim - 1);
            const double a = ub[0] * ub[0] - ub.tail(b.dim - 1).squaredNorm();
            const double bb = 2.0 * (l0 * ub[0] - l1.dot(ub.tail(b.dim - 1)));
            const double c = l0 * l0 - l1.squaredNorm();
            // smallest positive root of a t^2 + b t + c = 0 (c > 0)
            double t = kInf;
            if (std::abs(a) < 1e-300) {
                if (bb < 0.0) t = -c / bb;
            } else {
                const double disc = bb * bb - 4.0 * a * c;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    const double r1 = (-bb - sq) / (2.0 * a);
                    const double r2 = (-bb + sq) / (2.0 * a);
                    for (double r : {std::min(r1, r2), std::max(r1, r2)})
                        if (r > 0.0) {
                            t = r;
                            break;
                        }
                }
            }
            if (t < kInf) rho = std::max(rho, 1.0 / t);
        } else {
            Eigen::MatrixXd um(b.order, b.order);
            unsvec(u, b.off, um);
            const Eigen::VectorXd d = b.sig.cwiseSqrt().cwiseInverse();
            um = d.asDiagonal() * um * d.asDiagonal();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(um, Eigen::EigenvaluesOnly);
            rho = std::max(rho, -es.eigenvalues().minCoeff());
        }
    }
    return std::max(rho, 0.0);
}

// Smallest "eigenvalue" of a cone point (distance into the cone).
double cone_min_eig(const std::vector<Block>& blocks, const Eigen::VectorXd& s) {
    double me = kInf;
    for (const auto& b : blocks) {
        const auto sb = s.segment(b.off, b.dim);
        if (b.type == ConeType::NonNeg) {
            me = std::min(me, sb.minCoeff());
        } else if (b.type == ConeType::Soc) {
            me = std::min(me, sb[0] - sb.tail(b.dim - 1).norm());
        } else {
            Eigen::MatrixXd sm(b.order, b.order);
            unsvec(s, b.off, sm);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sm, Eigen::EigenvaluesOnly);
            me = std::min(me, es.eigenvalues().minCoeff());
        }
    }
    return me;
}

void shift_into_cone(const std::vector<Block>& blocks, Eigen::VectorXd& s, int total) {
    const double me = cone_min_eig(blocks, s);
    if (me < 1e-6) s += (1.0 + std::max(0.0, -me)) * cone_identity(blocks, total);
}

} // namespace

Solution IpmBackend::solve(const ConicProgram& program) {
    const auto t0 = std::chrono::steady_clock::now();
    Solution sol;
    auto finish = [&](SolveStatus st) {
        sol.status = st;
        sol.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    };

    const int n = program.n_vars;
    const Eigen::VectorXd c = program.c_vector();
    const Eigen::VectorXd h_all = program.h_vector();
    Eigen::MatrixXd g_all = Eigen::MatrixXd::Zero(program.n_rows(), n);
    for (const auto& t : program.entries) g_all(t.row(), t.col()) += t.value();

    // Split equality rows from cone rows.
    std::vector<Block> blocks;
    int mc = 0, k = 0;
    {
        int row = 0;
        for (const auto& cb : program.blocks) {
            if (cb.type == ConeType::Zero)
                k += cb.rows();
            else
                mc += cb.rows();
            row += cb.rows();
        }
        (void)row;
    }
    Eigen::MatrixXd gc(mc, n), a_eq(k, n);
    Eigen::VectorXd hc(mc), b_eq(k);
    {
        int row = 0, crow = 0, erow = 0;
        for (const auto& cb : program.blocks) {
            const int r = cb.rows();
            if (cb.type == ConeType::Zero) {
                a_eq.middleRows(erow, r) = g_all.middleRows(row, r);
                b_eq.segment(erow, r) = h_all.segment(row, r);
                erow += r;
            } else {
                Block blk;
                blk.type = cb.type;
                blk.dim = r;
                blk.order = cb.size;
                blk.off = crow;
                gc.middleRows(crow, r) = g_all.middleRows(row, r);
                hc.segment(crow, r) = h_all.segment(row, r);
                blocks.push_back(std::move(blk));
                crow += r;
            }
            row += r;
        }
    }
    if (mc == 0) {
        // No barrier cones: the feasible set is the affine subspace a_eq x = b,
        // so the minimum-norm solution is optimal whenever the cost is
        // orthogonal to the null space, and the problem is otherwise unbounded.
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a_eq);
        sol.x = cod.solve(b_eq);
        const double feas = (a_eq * sol.x - b_eq).norm() / std::max(1.0, b_eq.norm());
        if (feas > 1e-8) return finish(SolveStatus::PrimalInfeasible);
        // A cost component in the null space of a_eq means unboundedness.
        const Eigen::VectorXd y_ls =
            a_eq.transpose().completeOrthogonalDecomposition().solve(c);
        const double dual_res = (c - a_eq.transpose() * y_ls).norm() / std::max(1.0, c.norm());
        if (dual_res > 1e-8) return finish(SolveStatus::DualInfeasible);
        sol.objective = c.dot(sol.x);
        sol.certificate_residual = std::max(feas, dual_res);
        sol.iterations = 1;
        return finish(SolveStatus::Optimal);
    }

    // Only the cost and right-hand sides are normalized. Matrix equilibration
    // (Ruiz-style row/column scaling) was tried and rejected: on the precoder
    // subproblems it moves the optimum to scaled coordinates with very large
    // norm, where the stopping certificates cannot distinguish a merely
    // feasible point from the optimum, and the solver settles short of it.
    Eigen::VectorXd cs = c;
    const double cost_scale = std::max(1.0, cs.lpNorm<Eigen::Infinity>());
    cs /= cost_scale;
    const double rhs_scale =
        std::max({1.0, hc.lpNorm<Eigen::Infinity>(), k ? b_eq.lpNorm<Eigen::Infinity>() : 0.0});
    hc /= rhs_scale;
    if (k > 0) b_eq /= rhs_scale;
    for (auto& b : blocks) {
        b.gd = gc.middleRows(b.off, b.dim);
        if (b.type == ConeType::Soc) b.gram = b.gd.transpose() * b.gd;
    }
    // Maps a scaled iterate back to original variables.
    auto unscale = [&](const Eigen::VectorXd& xs) {
        return Eigen::VectorXd(rhs_scale * xs);
    };

    double m_deg = 0;
    for (const auto& b : blocks)
        m_deg += b.type == ConeType::NonNeg ? b.dim : (b.type == ConeType::Soc ? 1 : b.order);

    const double tol = options_.tolerance;
    double reg = 1e-12;

    // The reduced KKT matrix H = G'W^{-2}G inherits the squared condition
    // number of W^{-1}G; factoring the stacked matrix [W^{-1}G; sqrt(reg) I]
    // by QR instead keeps the solve accuracy at the condition number of
    // W^{-1}G itself, which matters on badly scaled instances.
    Eigen::MatrixXd gw_stack(mc + n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr;
    Eigen::MatrixXd hinv_at; // H^{-1} A'
    Eigen::LDLT<Eigen::MatrixXd> ldlt_schur;

    auto solve_h = [&](const Eigen::VectorXd& fx) {
        const auto rfac = qr.matrixQR().topRows(n);
        Eigen::VectorXd t = rfac.transpose().triangularView<Eigen::Lower>().solve(fx);
        return Eigen::VectorXd(rfac.triangularView<Eigen::Upper>().solve(t));
    };

    auto assemble = [&](bool identity_scaling) -> bool {
        for (const auto& b : blocks) {
            auto rows = gw_stack.middleRows(b.off, b.dim);
            if (identity_scaling || b.type == ConeType::Zero) {
                rows = b.gd;
            } else if (b.type == ConeType::NonNeg) {
                rows = b.w.cwiseInverse().asDiagonal() * b.gd;
            } else if (b.type == ConeType::Soc) {
                // W^{-1}u = eta^{-1}(2 q q'u - J u)
                rows = (2.0 / b.eta) * b.q * (b.q.transpose() * b.gd);
                rows.row(0) -= b.gd.row(0) / b.eta;
                rows.bottomRows(b.dim - 1) += b.gd.bottomRows(b.dim - 1) / b.eta;
            } else {
                Eigen::MatrixXd um(b.order, b.order);
                Eigen::VectorXd col(b.dim);
                for (int j = 0; j < n; ++j) {
                    unsvec(b.gd.col(j), 0, um);
                    const Eigen::MatrixXd res = b.r_inv * um * b.r_inv.transpose();
                    svec_into(0.5 * (res + res.transpose()), col, 0);
                    rows.col(j) = col;
                }
            }
        }
        double colsq = 0.0;
        for (int j = 0; j < n; ++j)
            colsq = std::max(colsq, gw_stack.col(j).head(mc).squaredNorm());
        gw_stack.bottomRows(n) =
            std::sqrt(reg * std::max(1.0, colsq)) * Eigen::MatrixXd::Identity(n, n);
        qr.compute(gw_stack);
        for (int j = 0; j < n; ++j) {
            const double rd = qr.matrixQR()(j, j);
            if (!std::isfinite(rd) || rd == 0.0) return false;
        }
        if (k > 0) {
            hinv_at.resize(n, k);
            for (int j = 0; j < k; ++j) hinv_at.col(j) = solve_h(a_eq.row(j).transpose());
            ldlt_schur.compute(a_eq * hinv_at);
            if (ldlt_schur.info() != Eigen::Success) return false;
        }
        return true;
    };

    // H v computed from the stacked factor (exactly the matrix QR factored).
    auto apply_h = [&](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(gw_stack.transpose() * (gw_stack * v));
    };

    auto kkt_solve = [&](const Eigen::VectorXd& fx, const Eigen::VectorXd& fy, Eigen::VectorXd& dx,
                         Eigen::VectorXd& dy) {
        if (k == 0) {
            dx = solve_h(fx);
            // One step of iterative refinement.
            dx += solve_h(fx - apply_h(dx));
            dy.resize(0);
            return;
        }
        const Eigen::VectorXd t1 = solve_h(fx);
        dy = ldlt_schur.solve(a_eq * t1 - fy);
        dx = t1 - hinv_at * dy;
        const Eigen::VectorXd rx = fx - apply_h(dx) - a_eq.transpose() * dy;
        const Eigen::VectorXd ry = fy - a_eq * dx;
        const Eigen::VectorXd t2 = solve_h(rx);
        const Eigen::VectorXd dy2 = ldlt_schur.solve(a_eq * t2 - ry);
        dx += t2 - hinv_at * dy2;
        dy += dy2;
    };

    // Homogeneous self-dual embedding: the iterate (x, y, z, s, tau, kappa)
    // satisfies the cone constraints exactly while the homogeneous residuals
    // are driven to zero. The extra (tau, kappa) pair absorbs infeasible or
    // unbounded directions, which keeps the iterates from racing along
    // near-recession rays on badly conditioned data.
    if (!assemble(true)) return finish(SolveStatus::NumericalFailure);
    Eigen::VectorXd x, y, s, z, dy_tmp;
    kkt_solve(gc.transpose() * hc, b_eq, x, dy_tmp);
    s = hc - gc * x;
    shift_into_cone(blocks, s, mc);
    Eigen::VectorXd xd;
    kkt_solve(-cs, Eigen::VectorXd::Zero(k), xd, y);
    z = gc * xd;
    shift_into_cone(blocks, z, mc);
    if (k == 0) y.resize(0);
    if (y.size() != k) y = Eigen::VectorXd::Zero(k);
    double tau = 1.0, kappa = 1.0;

    const double resx0 = std::max(1.0, cs.norm());
    const double resz0 = std::max(1.0, std::hypot(hc.norm(), b_eq.norm()));
    static const bool trace = std::getenv("NOMA_IPM_TRACE") != nullptr;

    double best_resid = kInf;
    int best_iter = 0;
    Eigen::VectorXd ds_tilde(mc), dz_tilde(mc);
    int iter = 0;
    for (; iter < options_.max_iterations; ++iter) {
        const Eigen::VectorXd rx = tau * cs + gc.transpose() * z +
                                   (k ? (a_eq.transpose() * y).eval()
                                      : Eigen::VectorXd::Zero(n).eval());
        const Eigen::VectorXd ry = k ? (a_eq * x - tau * b_eq).eval() : Eigen::VectorXd();
        const Eigen::VectorXd rz = s + gc * x - tau * hc;
        const double rtau = kappa + cs.dot(x) + (k ? b_eq.dot(y) : 0.0) + hc.dot(z);

        const double pcost = cs.dot(x) / tau;
        const double gap = s.dot(z) / (tau * tau);
        const double relgap = gap / std::max(1.0, std::abs(pcost));
        const double pres = std::hypot(rz.norm(), k ? ry.norm() : 0.0) / (tau * resz0);
        const double dres = rx.norm() / (tau * resx0);
        const double resid = std::max({pres, dres, relgap});

        if (trace)
            std::fprintf(stderr,
                         "it %3d pcost % .6e pres %.3e dres %.3e relgap %.3e tau %.3e kap %.3e\n",
                         iter, pcost, pres, dres, relgap, tau, kappa);
        if (!x.allFinite() || !s.allFinite() || !z.allFinite() || !std::isfinite(tau) ||
            !std::isfinite(kappa) || tau <= 0.0)
            break;
        if (resid < best_resid) {
            best_resid = resid;
            best_iter = iter;
            sol.x = unscale(x / tau);
            sol.objective = c.dot(sol.x);
            sol.iterations = iter;
            sol.certificate_residual = resid;
        }
        if (pres <= tol && dres <= tol && relgap <= tol) return finish(SolveStatus::Optimal);

        // Infeasibility certificates (tau -> 0, kappa bounded away from 0).
        const double theta_p = -(hc.dot(z) + (k ? b_eq.dot(y) : 0.0));
        if (theta_p > 0.0) {
            const Eigen::VectorXd cert = gc.transpose() * z +
                                         (k ? (a_eq.transpose() * y).eval()
                                            : Eigen::VectorXd::Zero(n).eval());
            if (cert.norm() / theta_p <= tol * resx0) return finish(SolveStatus::PrimalInfeasible);
        }
        const double theta_d = -cs.dot(x);
        if (theta_d > 0.0) {
            const double cert = std::hypot((gc * x + s).norm(), k ? (a_eq * x).norm() : 0.0);
            if (cert / theta_d <= tol * resz0) return finish(SolveStatus::DualInfeasible);
        }

        // On ill-conditioned data the residuals floor out well above the
        // target tolerance; stop once they have stalled and report the best
        // iterate so far.
        if (iter - best_iter >= 30) break;

        if (!compute_scalings(blocks, s, z)) {
            // A cone block grazed the boundary; nudge both points back into
            // the interior (raises the barrier parameter slightly) and retry
            // rather than giving up on an otherwise healthy iterate.
            const double mu_now = (s.dot(z) + tau * kappa) / (m_deg + 1.0);
            const double delta = std::max(1e-14, 1e-3 * mu_now);
            const Eigen::VectorXd e = cone_identity(blocks, mc);
            s += (delta - std::min(0.0, cone_min_eig(blocks, s))) * e;
            z += (delta - std::min(0.0, cone_min_eig(blocks, z))) * e;
            if (!compute_scalings(blocks, s, z)) break;
        }
        if (!assemble(false)) {
            reg *= 100.0;
            if (reg > 1e-4) break;
            continue;
        }

        const double mu = (s.dot(z) + tau * kappa) / (m_deg + 1.0);
        Eigen::VectorXd lam_all(mc);
        for (const auto& b : blocks) lam_all.segment(b.off, b.dim) = b.lam;

        // Static solve: [H A'; A 0](x1, y1) = (-(c - G'W^{-2}h), b).
        Eigen::VectorXd wih, w2h;
        apply_w(blocks, hc, wih, true, true);
        apply_w(blocks, wih, w2h, true);
        Eigen::VectorXd x1, y1;
        kkt_solve(-cs + gc.transpose() * w2h, b_eq, x1, y1);
        Eigen::VectorXd z1;
        {
            Eigen::VectorXd t;
            apply_w(blocks, gc * x1 - hc, t, true, true);
            apply_w(blocks, t, z1, true);
        }
        const double denom_static =
            cs.dot(x1) + (k ? b_eq.dot(y1) : 0.0) + hc.dot(z1) - kappa / tau;

        double dtau = 0.0, dkappa = 0.0;
        // Solves the scaled Newton system
        //   A'dy + G'dz + c dtau                     = bx
        //   A dx - b dtau                            = by
        //   ds + G dx - h dtau                       = bz
        //   dkappa + c'dx + b'dy + h'dz              = btau
        //   lam o (W^{-1}ds + W dz)                  = -lam o d
        //   tau dkappa + kappa dtau                  = -d2
        auto newton = [&](const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                          const Eigen::VectorXd& bz, double btau, const Eigen::VectorXd& d,
                          double d2, Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                          Eigen::VectorXd& dz, double& dt, double& dk_out) {
            Eigen::VectorXd u, u2;
            apply_w(blocks, -bz, u, true, true);
            u -= d;
            apply_w(blocks, u, u2, true);
            const Eigen::VectorXd fx = bx - gc.transpose() * u2;
            Eigen::VectorXd x2, y2;
            kkt_solve(fx, k ? by : Eigen::VectorXd(), x2, y2);
            Eigen::VectorXd z2;
            {
                Eigen::VectorXd t;
                apply_w(blocks, gc * x2 - bz, t, true, true);
                t -= d;
                apply_w(blocks, t, z2, true);
            }
            dt = (btau + d2 / tau - (cs.dot(x2) + (k ? b_eq.dot(y2) : 0.0) + hc.dot(z2))) /
                 denom_static;
            dx = x2 + dt * x1;
            if (k) dy = y2 + dt * y1;
            dz = z2 + dt * z1;
            Eigen::VectorXd wdz;
            apply_w(blocks, dz, wdz, false);
            apply_w(blocks, -(d + wdz).eval(), ds, false, true);
            dk_out = -(d2 + kappa * dt) / tau;
        };

        auto direction = [&](const Eigen::VectorXd& d, double d2, double fr, Eigen::VectorXd& dx,
                             Eigen::VectorXd& dy, Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
            const Eigen::VectorXd bx = -fr * rx;
            const Eigen::VectorXd by = k ? (-fr * ry).eval() : Eigen::VectorXd();
            const Eigen::VectorXd bz = -fr * rz;
            const double btau = -fr * rtau;
            newton(bx, by, bz, btau, d, d2, dx, dy, ds, dz, dtau, dkappa);

            // Residual-equation errors from the reduced solve accumulate in
            // exactly the residual rows (the complementarity rows are met by
            // construction), which otherwise drags the iterate to a
            // complementary but non-stationary point. One full-system
            // refinement pass keeps all six equation groups balanced.
            const Eigen::VectorXd ex =
                bx - (gc.transpose() * dz + dtau * cs +
                      (k ? (a_eq.transpose() * dy).eval() : Eigen::VectorXd::Zero(n).eval()));
            const Eigen::VectorXd ey = k ? (by - (a_eq * dx - dtau * b_eq)).eval() : Eigen::VectorXd();
            const Eigen::VectorXd ez = bz - (ds + gc * dx - dtau * hc);
            const double etau =
                btau - (dkappa + cs.dot(dx) + (k ? b_eq.dot(dy) : 0.0) + hc.dot(dz));
            Eigen::VectorXd cx, cy, csv, cz;
            double ctau = 0.0, ckappa = 0.0;
            newton(ex, ey, ez, etau, Eigen::VectorXd::Zero(mc), 0.0, cx, cy, csv, cz, ctau,
                   ckappa);
            dx += cx;
            if (k) dy += cy;
            ds += csv;
            dz += cz;
            dtau += ctau;
            dkappa += ckappa;

            apply_w(blocks, dz, dz_tilde, false);
            apply_w(blocks, ds, ds_tilde, true, true);
        };

        auto step_bound = [&](double dt, double dk) {
            double rho = std::max(max_step_coef(blocks, ds_tilde), max_step_coef(blocks, dz_tilde));
            if (dt < 0.0) rho = std::max(rho, -dt / tau);
            if (dk < 0.0) rho = std::max(rho, -dk / kappa);
            return rho;
        };

        // Predictor (affine direction).
        Eigen::VectorXd dx, dy, ds, dz;
        direction(lam_all, tau * kappa, 1.0, dx, dy, ds, dz);
        const double dtau_aff = dtau, dkappa_aff = dkappa;
        const double rho_aff = step_bound(dtau, dkappa);
        const double alpha_aff = rho_aff > 0.0 ? std::min(1.0, 1.0 / rho_aff) : 1.0;
        // Centering weight from the predicted complementarity after the
        // affine step, including its second-order term.
        const double dsdz = ds_tilde.dot(dz_tilde) + dtau_aff * dkappa_aff;
        const double gap_total = s.dot(z) + tau * kappa;
        const double sigma = std::pow(
            std::min(1.0, std::max(0.0, 1.0 - alpha_aff +
                                            dsdz / gap_total * alpha_aff * alpha_aff)),
            3.0);

        // Corrector (combined direction with Mehrotra second-order term).
        const Eigen::VectorXd lam2 = jordan_mul(blocks, lam_all, lam_all);
        const Eigen::VectorXd center = sigma * mu * cone_identity(blocks, mc);
        Eigen::VectorXd d =
            jordan_div_lambda(blocks, lam2 + jordan_mul(blocks, ds_tilde, dz_tilde) - center);
        double d2 = tau * kappa + dtau_aff * dkappa_aff - sigma * mu;
        direction(d, d2, 1.0 - sigma, dx, dy, ds, dz);

        double rho = step_bound(dtau, dkappa);
        double alpha = rho > 0.0 ? std::min(1.0, 0.99 / rho) : 1.0;

        // The second-order term can point the combined direction almost
        // straight out of the cone when the iterate sits near the boundary;
        // in that case fall back to the plain centering direction.
        if (alpha < 0.1 * alpha_aff || alpha < 1e-6) {
            d = jordan_div_lambda(blocks, lam2 - center);
            d2 = tau * kappa - sigma * mu;
            direction(d, d2, 1.0 - sigma, dx, dy, ds, dz);
            rho = step_bound(dtau, dkappa);
            alpha = rho > 0.0 ? std::min(1.0, 0.99 / rho) : 1.0;
        }

        if (trace)
            std::fprintf(stderr, "      alpha_aff %.3e sigma %.3e alpha %.3e mu %.3e |dx| %.3e\n",
                         alpha_aff, sigma, alpha, mu, dx.norm());
        x += alpha * dx;
        if (k) y += alpha * dy;
        s += alpha * ds;
        z += alpha * dz;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        // The embedding is invariant under uniform positive rescaling of the
        // whole iterate; renormalizing tau to 1 keeps the Newton systems well
        // scaled when the iterate drifts toward small tau.
        if (tau > 0.0 && std::isfinite(tau) && (tau < 0.1 || tau > 10.0)) {
            const double f = 1.0 / tau;
            x *= f;
            if (k) y *= f;
            s *= f;
            z *= f;
            kappa *= f;
            tau = 1.0;
        }
    }
    if (best_resid == kInf) return finish(SolveStatus::NumericalFailure);
    sol.iterations = iter;
    // The best iterate is still usable when its certificates are only
    // moderately short of the target; report it as a reduced-accuracy solve.
    if (best_resid <= options_.reduced_tolerance) return finish(SolveStatus::Optimal);
    return finish(SolveStatus::IterationLimit);
}

} // namespace noma
