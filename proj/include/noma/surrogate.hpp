#ifndef NOMA_SURROGATE_HPP
#define NOMA_SURROGATE_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "noma/rates.hpp"

namespace noma {

/// Thrown when an SDP/SOC minorant is evaluated outside the region where its
/// lower-bound proof holds.
class TrustRegionError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Tolerance for accepting nearly-PSD weight matrices after symmetrization.
inline constexpr double kPsdTolerance = 1e-9;

/// Concave quadratic lower bound of one (message, decoder) log-det rate,
/// tight at the anchor:
///   a + 2 Re<lin, V_var> - sum_{(s,l) in included} ||weight_sqrt H_{s,rx} V_{s,l}||_F^2 - noise_term
struct QpMinorant {
    double a = 0.0; // anchor constant, < 0 whenever the anchor rate is positive
    int var_cell = 0, var_user = 0;
    Eigen::MatrixXcd lin; // Nt x L
    int rx_cell = 0, rx_user = 0;
    Eigen::MatrixXcd weight_sqrt; // D^{1/2}, Nr x Nr
    double noise_term = 0.0;      // sigma2 * tr(D)
    std::vector<UeRef> included;  // terms of <D, M(V)>
};

struct QpMinorantSet {
    PrecoderSet anchor;
    TaskList tasks;
    std::vector<std::vector<QpMinorant>> terms; // [message][decoder]
};

QpMinorantSet qp_minorants(const Channels& channels, const PrecoderSet& anchor, double sigma2,
                           const TaskList& tasks);

double eval_qp_minorant(const QpMinorant& m, const Channels& channels, const PrecoderSet& v);

/// SDP-family lower bound of one rate term:
///   anchor_rate + L - <c_mat, (I + Q~(V))^{-1}>
/// where Q~(V) carries the exact interference covariance; the bound is valid
/// wherever I + Q~(V) is positive definite and touches at the anchor. The
/// lowered subproblem replaces the covariance by its affine linearization
/// (with the trust region L(V) >= 0 as an explicit constraint), which keeps
/// the program conic; the outer loop re-validates iterates against exact
/// rates because that relaxation is not itself a lower bound.
struct SdpMinorant {
    double anchor_rate = 0.0;
    int var_cell = 0, var_user = 0;
    int rx_cell = 0, rx_user = 0;
    Eigen::MatrixXcd t_map;  // M_excl(anchor)^{-1} H Vk, Nr x L
    Eigen::MatrixXcd c_mat;  // I_L + Vk^H H^H M_excl(anchor)^{-1} H Vk
    Eigen::MatrixXcd c_sqrt; // Hermitian square root of c_mat
    std::vector<UeRef> excl_included; // terms of L(V) and M_excl
    double sigma2 = 0.0;
};

struct SdpMinorantSet {
    PrecoderSet anchor;
    TaskList tasks;
    std::vector<std::vector<SdpMinorant>> terms;
};

SdpMinorantSet sdp_minorants(const Channels& channels, const PrecoderSet& anchor, double sigma2,
                             const TaskList& tasks);

/// Affine trust-region map L(V) of a minorant, evaluated at v.
Eigen::MatrixXcd sdp_trust_region(const SdpMinorant& m, const Channels& channels,
                                  const PrecoderSet& anchor, const PrecoderSet& v);

/// Affine map Q(V) of a minorant, evaluated at v.
Eigen::MatrixXcd sdp_q_map(const SdpMinorant& m, const Channels& channels,
                           const PrecoderSet& anchor, const PrecoderSet& v);

/// Throws TrustRegionError when L(v) has an eigenvalue below -kPsdTolerance,
/// and std::domain_error when I + Q(v) is not positive definite.
double eval_sdp_minorant(const SdpMinorant& m, const Channels& channels, const PrecoderSet& anchor,
                         const PrecoderSet& v);

/// ln(1+z) >= a(zbar) - b(zbar)/z coefficients.
double soc_a(double z_bar);
double soc_b(double z_bar);

/// Scalar (MISO) lower bound a - b * M_excl(V) / phi(V), valid while phi(V) > 0.
struct SocMinorant {
    double z_bar = 0.0;
    double a_val = 0.0, b_val = 0.0;
    int var_cell = 0, var_user = 0;
    int rx_cell = 0, rx_user = 0;
    bool own_decoder = false; // phi uses Re{.} products when the decoder owns the message
    std::complex<double> anchor_prod; // H_{rx} Vk_var
    std::vector<UeRef> excl_included; // terms of M_excl
    double sigma2 = 0.0;
};

struct SocMinorantSet {
    PrecoderSet anchor; // rotated so every direct product is real nonnegative
    TaskList tasks;
    std::vector<std::vector<SocMinorant>> terms;
};

SocMinorantSet soc_minorants(const Channels& channels, const PrecoderSet& anchor, double sigma2,
                             const TaskList& tasks);

double soc_phi(const SocMinorant& m, const Channels& channels, const PrecoderSet& v);

/// Throws TrustRegionError when phi(v) <= 0.
double eval_soc_minorant(const SocMinorant& m, const Channels& channels, const PrecoderSet& v);

// Standalone inequality residuals (all nonnegative up to roundoff).

/// lambda_min of V^H X^{-1} V - [Vb^H Xb^{-1} V + V^H Xb^{-1} Vb - Vb^H Xb^{-1} X Xb^{-1} Vb].
double check_inequality_in1(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& v_bar,
                            const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& x_bar);

/// ln|X| - [ln|Xb| - <Xb, X^{-1} - Xb^{-1}>].
double check_inequality_in2(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& x_bar);

/// ln(1+z) - a(zb) + b(zb)/z.
double check_inequality_zf8(double z, double z_bar);

} // namespace noma

#endif
