#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "floqflow/hilbert.hpp"
#include "floqflow/terms.hpp"

namespace floqflow::dense {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Exact many-body operators as full complex matrices. Intended for L <= ~13
// spins; the per-matrix construction cap below guards against accidental
// huge allocations.
constexpr std::int64_t kDenseDimCap = std::int64_t(1) << 13;

Mat from_terms(const TermList& tl);

// sqrt(tr(A^dag A) / (norm_sites * dim)). norm_sites is the physical L.
double intensive_norm(const Mat& op, int norm_sites);

Mat commutator(const Mat& a, const Mat& b);

// <basis, op> = tr(basis^dag op) / dim.
cplx inner_coefficient(const Mat& op, const Mat& basis_string);

bool is_hermitian(const Mat& m, double rel_tol = 1e-12);

// One-cell translation operator (site i -> i+1 mod L), spin chains and
// two-spin Hubbard cells alike.
Mat translation_operator(const HilbertSpace& space);

// Single sigma^a on one site, as a full matrix.
Mat site_operator(int n_spins, int site, P op);

// Hermitian eigendecomposition (LAPACK-backed through Eigen).
struct Eig {
    Eigen::VectorXd evals;
    Mat evecs;
};
Eig hermitian_eig(const Mat& m);

// exp(i s H) for Hermitian H via eigendecomposition; reuses a prior Eig.
Mat unitary_from_eig(const Eig& e, double s);

// Row-major little-endian float64 (re,im) pairs, preceded by one int64 dim.
void export_binary(const Mat& m, const std::string& path);
Mat import_binary(const std::string& path);

// Deterministic random Hermitian matrix for property tests.
Mat random_hermitian(int dim, std::uint64_t seed);
// Haar-ish random unitary (QR of Gaussian matrix).
Mat random_unitary(int dim, std::uint64_t seed);

// Dense operator backend for the flow engine.
struct Backend {
    using Op = Mat;
    int norm_sites;  // physical L entering the intensive norm

    explicit Backend(int L) : norm_sites(L) {}

    Op clone(const Op& a) const { return a; }
    Op zero_like(const Op& a) const { return Op::Zero(a.rows(), a.cols()); }
    void axpy(Op& y, cplx alpha, const Op& x) const { y.noalias() += alpha * x; }
    void scale(Op& y, cplx alpha) const { y *= alpha; }
    Op adjoint(const Op& a) const { return a.adjoint(); }
    Op commutator(const Op& a, const Op& b) const { return dense::commutator(a, b); }
    double norm(const Op& a) const { return intensive_norm(a, norm_sites); }
    void compress(Op&) const {}
    void symmetrize(Op& a) const { a = 0.5 * (a + a.adjoint()).eval(); }
    double size_metric(const Op&) const { return 0.0; }
};

}  // namespace floqflow::dense
