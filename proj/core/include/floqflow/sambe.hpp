#pragma once

#include <Eigen/Dense>
#include <vector>

#include "floqflow/block.hpp"
#include "floqflow/dense.hpp"
#include "floqflow/flow.hpp"

namespace floqflow::sambe {

using dense::Mat;
using dense::Vec;
using DenseHarmonic = flow::Harmonic<Mat>;

// Frequency-domain block Hamiltonian, blocks m in [-m_max_sambe, m_max_sambe],
// block (m+M, m) = H_M + m Omega delta_{M,0}.
struct SambeHamiltonian {
    double omega = 1.0;
    int m_max_sambe = 1;
    std::int64_t dim_h = 0;  // physical Hilbert space dimension
    Mat matrix;

    std::int64_t n_blocks() const { return 2 * std::int64_t(m_max_sambe) + 1; }
    // row/col offset of Floquet index m
    std::int64_t offset(int m) const { return (m + m_max_sambe) * dim_h; }
};

SambeHamiltonian build_sambe(const DenseHarmonic& H, int m_max_sambe);

// Minimum truncation from the convergence rule: ceil(4 ||H|| / Omega) + 2,
// with ||H|| the intensive norm of the full harmonic content.
int min_m_max_sambe(const DenseHarmonic& H, int norm_sites);

// Eigendecomposition of the Sambe matrix, cached by callers across t values.
struct SambeEig {
    SambeHamiltonian ham;  // matrix released after decomposition
    Eigen::VectorXd evals;
    Mat evecs;
};
SambeEig decompose(SambeHamiltonian s);

// Fold to (-Omega/2, Omega/2].
double fold_quasienergy(double eps, double omega);

// All eigenvalues of the truncated Sambe matrix, sorted.
std::vector<double> quasienergy_spectrum(const SambeEig& e);

// The dim_h physical quasi-energies: eigenpairs with mean Floquet index
// closest to the central block, folded and sorted.
std::vector<double> central_quasienergies(const SambeEig& e);

// U(t, t') = sum_m <0| e^{-i Hs (t-t')} |m> e^{-i m Omega t'}.
Mat propagator_sambe(const SambeEig& e, double t, double t_prime);

// Doubles m_max_sambe until the propagator changes by < conv_tol in
// operator (Frobenius) norm. Throws on non-convergence.
Mat propagator_sambe_auto(const DenseHarmonic& H, double t, double t_prime,
                          int norm_sites, double conv_tol = 1e-9,
                          int* m_used = nullptr, int m_limit = 64);

// Independent ground truth: time-ordered product of midpoint-exponential
// steps of H(tau) = H_0 + H_1 e^{i w tau} + h.c.
Mat propagator_oracle(const DenseHarmonic& H, double t, double t_prime,
                      int n_steps);

// ---------------------------------------------------------------------------
// Distance metric (Eq.-(11)-style trace form)

// tr{ e^{i Ht0 t} <0| e^{-i Hs t} |0> } for each requested time, where
// Ht0 = H_0 (central block of the diagonal reference). Raw traces let the
// momentum-sector driver reassemble weighted sums.
std::vector<cplx> effective_overlap_traces(const SambeEig& e, const Mat& h0,
                                           const std::vector<double>& times);

// d^2(lambda, t) = 1 - Re tr{...} / tr(1) on a single dense pair.
std::vector<double> distance_metric(const DenseHarmonic& H, int m_max_sambe,
                                    const std::vector<double>& times);

// Same metric by explicit quadrature of || U_eff - U ||^2 / 2 over the
// starting time t0; cross-check for the trace form. Norm is tr/tr(1).
double distance_by_quadrature(const DenseHarmonic& H, double t, int n_t0,
                              int oracle_steps_per_period);

// Appendix-B bound norm: sqrt(tr(A^dag A)/tr 1) (no 1/L). The linear bound
// d <= 2 n T ||H_1|| holds in this normalization.
double bound_norm(const Mat& a);

// Momentum-sector distance map: for each flowed sector pair (H0_k, H1_k)
// accumulate weighted traces. blocks0/1 are the stored sectors of the
// momentum basis.
std::vector<double> distance_metric_block(const block::MomentumBasis& basis,
                                          const block::BlockOp& h0,
                                          const block::BlockOp& h1, double omega,
                                          int m_max_sambe,
                                          const std::vector<double>& times);

// ---------------------------------------------------------------------------
// Conservation metric C(t), Appendix-C trace form, intensive normalization.

// C(t) = sqrt( 2||H0||^2 - 2 Re sum_m tr{B_m H0 B_m^dag H0} / (L tr 1) )
// with B_m = <0| e^{i Hs t} |m>.
double conservation_metric(const SambeEig& e, const Mat& h0, int norm_sites,
                           double t);

// ||.||_S ensemble-window form; agrees with the trace form as the window
// grows. Used by the consistency property test.
double conservation_metric_window(const SambeEig& e, const Mat& h0,
                                  int norm_sites, double t, int window);

// ---------------------------------------------------------------------------
// Heating rate at (or near) the prethermal minimum.

struct HeatingRates {
    std::vector<double> times;
    std::vector<double> rate_correlator;    // method (a), interaction picture
    std::vector<double> rate_continuation;  // method (b), lambda -> lambda + i t
    double max_deviation = 0.0;
};

// psi: initial state; H: renormalized harmonics at lambda near lambda_pre.
HeatingRates heating_rate(const DenseHarmonic& H, const Vec& psi,
                          const std::vector<double>& t_grid,
                          int continuation_substeps = 8);

}  // namespace floqflow::sambe
