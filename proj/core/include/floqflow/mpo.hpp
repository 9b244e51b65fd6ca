#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "floqflow/dense.hpp"
#include "floqflow/fits.hpp"
#include "floqflow/flow.hpp"

namespace floqflow::mpo {

using Mat = Eigen::MatrixXcd;

// Matrix product operator on an open chain. Site tensor i is stored as a
// (d * chi_l) x (d * chi_r) matrix: entry (s * chi_l + a, s' * chi_r + b) is
// the coefficient of |s><s'| on the bond link (a, b). The represented
// operator is l . W_1 ... W_L . r.
struct MPO {
    int d = 2;  // physical dimension per site
    std::vector<Mat> w;
    Eigen::RowVectorXcd l;
    Eigen::VectorXcd r;

    int length() const { return int(w.size()); }
    int chi_l(int i) const { return int(w[size_t(i)].rows()) / d; }
    int chi_r(int i) const { return int(w[size_t(i)].cols()) / d; }
    int max_bond() const;
    // chi_l x chi_r slice at physical indices (s, s').
    Eigen::Block<const Mat> slab(int i, int s, int sp) const {
        return w[size_t(i)].block(s * chi_l(i), sp * chi_r(i), chi_l(i), chi_r(i));
    }
    void validate() const;  // shape consistency of bonds and boundaries
};

struct CompressionConfig {
    double svd_cutoff = 1e-10;  // relative discarded singular-value weight
    int max_bond = 64;
    // carry-bond cap while zipping products site-by-site before the final
    // gauge sweep; defaults to 2 * max_bond
    int product_bond_cap = 0;

    void validate() const;
    int zip_cap() const { return product_bond_cap > 0 ? product_bond_cap : 2 * max_bond; }
};

struct CompressionReport {
    double discarded_weight = 0;   // sqrt(sum of discarded sigma^2) / total
    bool target_reached = true;    // false if max_bond forced extra discard
};

// ---------------------------------------------------------------------------
// Templates

// Paper-form Ising W: [[1, J Sx, hx Sx + hz Sz], [0, 0, Sx], [0, 0, 1]].
MPO ising_mpo(double J, double h_x, double h_z, int L);

// Exponential-range template: bond-dimension-3 W with decaying channel
// e^{-1/zeta} A_i, A_i = a0 1 + ax Sx + ay Sy + az Sz. Ends of the chained
// coupling are `left_end` and `right_end` (d x d operators); `field` is the
// on-site term.
MPO exponential_mpo(double J, double zeta, const Eigen::Vector4d& a, const Mat& left_end,
                    const Mat& right_end, const Mat& field, int L);

// Sum of one local operator per site, bond dimension 2.
MPO local_sum_mpo(const Mat& op, int L);

// Single local operator at one site (bond dimension 1 everywhere).
MPO local_site_mpo(const Mat& op, int site, int L, int d);

// Product operator probe: given per-site d x d factors placed starting at
// `first_site` (identity elsewhere), bond dimension 1.
MPO product_probe_mpo(const std::vector<Mat>& factors, int first_site, int L, int d);

// Exponential-range Hubbard chain, physical dimension 4 (up/down per site),
// Jordan-Wigner hopping channels with decay e^{-1/L_hop} plus on-site
// interaction u_coeff * n_up n_down.
MPO exponential_hubbard_mpo(double t_h, double L_hop, double u_coeff, int L);

MPO zero_mpo(int L, int d);
MPO identity_mpo(int L, int d);

// ---------------------------------------------------------------------------
// Algebra

MPO mpo_add(const MPO& a, const MPO& b);  // direct sum, exact
void mpo_scale(MPO& a, cplx c);
MPO mpo_adjoint(const MPO& a);

// A * B via a site-by-site zip-up (SVD after each site against cfg); exact
// up to cfg.svd_cutoff at bonds capped by cfg.zip_cap().
MPO mpo_product(const MPO& a, const MPO& b, const CompressionConfig& cfg,
                CompressionReport* report = nullptr);

// AB - BA; both products zipped then compressed to cfg.
MPO mpo_commutator(const MPO& a, const MPO& b, const CompressionConfig& cfg,
                   CompressionReport* report = nullptr);

// Left-to-right QR gauge sweep + right-to-left SVD truncation.
MPO mpo_compress(const MPO& a, const CompressionConfig& cfg,
                 CompressionReport* report = nullptr);

// tr(A^dag B) / d^L via transfer contraction.
cplx mpo_inner(const MPO& a, const MPO& b);
// sqrt(tr(A^dag A) / (L d^L)).
double mpo_intensive_norm(const MPO& a);

// Dense matrix of the full chain; small L only.
dense::Mat to_dense(const MPO& a);

// Versioned binary container (shapes + row-major complex data + boundaries).
void export_binary(const MPO& a, const std::string& path);
MPO import_binary(const std::string& path);

// ---------------------------------------------------------------------------
// Flow backend

struct Backend {
    using Op = MPO;
    int norm_sites;
    CompressionConfig cfg;
    double bond_cap_metric = 0;  // set by integrate_flow resource ceiling

    Backend(int L, CompressionConfig c) : norm_sites(L), cfg(c) { cfg.validate(); }

    Op clone(const Op& a) const { return a; }
    Op zero_like(const Op& a) const { return zero_mpo(a.length(), a.d); }
    void axpy(Op& y, cplx alpha, const Op& x) const {
        Op xs = x;
        mpo_scale(xs, alpha);
        y = mpo_add(y, xs);
        if (y.max_bond() > cfg.zip_cap()) y = mpo_compress(y, cfg);
    }
    void scale(Op& y, cplx alpha) const { mpo_scale(y, alpha); }
    Op adjoint(const Op& a) const { return mpo_adjoint(a); }
    Op commutator(const Op& a, const Op& b) const {
        return mpo_commutator(a, b, cfg);
    }
    double norm(const Op& a) const { return mpo_intensive_norm(a); }
    void compress(Op& a) const { a = mpo_compress(a, cfg); }
    void symmetrize(Op& a) const {
        Op ad = mpo_adjoint(a);
        a = mpo_add(a, ad);
        mpo_scale(a, 0.5);
        a = mpo_compress(a, cfg);
    }
    double size_metric(const Op& a) const { return double(a.max_bond()); }
};

// Harmonic flow (m_max = 1) over MPOs: RK4 with per-stage compression.
// Bond-cap breach terminates with Termination::resource_ceiling — the
// loss-of-locality signal.
flow::FlowTrajectory<MPO> mpo_flow(const flow::Harmonic<MPO>& initial,
                                   const CompressionConfig& compression,
                                   flow::StepperConfig cfg);

// Observable co-flow: O_0(0) = obs, O_{m != 0}(0) = 0 up to m_obs harmonics.
flow::FlowTrajectory<MPO> mpo_observable_flow(const flow::Harmonic<MPO>& initial,
                                              const MPO& obs, int m_obs,
                                              const CompressionConfig& compression,
                                              flow::StepperConfig cfg);

// ---------------------------------------------------------------------------
// Locality diagnostics

struct LocalityDiagnostic {
    std::vector<double> lambdas;
    std::vector<double> zeta;      // decay length per sampled lambda
    std::vector<double> fit_r2;
    fits::CriticalFit critical;    // lambda_c from the 1/zeta tail
};

// Coefficients of probe strings Sx P... P Sx (P = 1/2 + Sz) of widths
// n = 2..max_width centered in the chain: c_n = tr(P^dag H)/tr(P^dag P).
std::vector<double> probe_coefficients(const MPO& h, int max_width);

// Exponential tail fits across snapshots; fit window keeps coefficients
// above coeff_floor (100x drop tolerance by convention).
LocalityDiagnostic spreading_profile(const flow::FlowTrajectory<MPO>& traj,
                                     int max_width, double coeff_floor);

// Site-resolved weight <probe_j, O> for a single-site probe at every site.
std::vector<double> observable_site_profile(const MPO& o, const Mat& probe);

}  // namespace floqflow::mpo
