#include "floqflow/dense.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <random>
#include <stdexcept>

namespace floqflow::dense {

Mat from_terms(const TermList& tl) {
    const std::int64_t dim = std::int64_t(1) << tl.n_spins;
    if (dim > kDenseDimCap)
        throw std::invalid_argument("dense::from_terms: dimension exceeds dense cap");
    Mat m = Mat::Zero(dim, dim);
    for (const auto& t : tl.terms) {
        for (std::int64_t s = 0; s < dim; ++s) {
            cplx amp;
            std::uint64_t out = apply_term(t, std::uint64_t(s), amp);
            m(std::int64_t(out), s) += amp;
        }
    }
    return m;
}

double intensive_norm(const Mat& op, int norm_sites) {
    return std::sqrt(op.squaredNorm() / (double(norm_sites) * double(op.rows())));
}

Mat commutator(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("commutator: dimension mismatch");
    Mat c;
    c.noalias() = a * b;
    c.noalias() -= b * a;
    return c;
}

cplx inner_coefficient(const Mat& op, const Mat& basis_string) {
    if (op.rows() != basis_string.rows())
        throw std::invalid_argument("inner_coefficient: dimension mismatch");
    return basis_string.conjugate().cwiseProduct(op).sum() / double(op.rows());
}

bool is_hermitian(const Mat& m, double rel_tol) {
    double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() < rel_tol * scale;
}

Mat translation_operator(const HilbertSpace& space) {
    const int n = space.num_spins();
    const int cell = space.spins_per_cell();
    const std::int64_t dim = space.dim();
    Mat t = Mat::Zero(dim, dim);
    for (std::int64_t s = 0; s < dim; ++s) {
        // cyclic shift of the bit pattern by one cell
        std::uint64_t u = std::uint64_t(s);
        std::uint64_t mask = (n == 64) ? ~0ull : ((std::uint64_t(1) << n) - 1);
        std::uint64_t shifted = ((u << cell) | (u >> (n - cell))) & mask;
        t(std::int64_t(shifted), s) = 1.0;
    }
    return t;
}

Mat site_operator(int n_spins, int site, P op) {
    TermList tl;
    tl.n_spins = n_spins;
    tl.add(1.0, {{site, op}});
    return from_terms(tl);
}

Eig hermitian_eig(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eig: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

Mat unitary_from_eig(const Eig& e, double s) {
    Vec phases = (cplx(0, 1) * s * e.evals.cast<cplx>().array()).exp();
    return e.evecs * phases.asDiagonal() * e.evecs.adjoint();
}

void export_binary(const Mat& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("export_binary: cannot open " + path);
    std::int64_t dim = m.rows();
    f.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    // row-major (re, im) float64 pairs
    for (std::int64_t i = 0; i < m.rows(); ++i)
        for (std::int64_t j = 0; j < m.cols(); ++j) {
            double re = m(i, j).real(), im = m(i, j).imag();
            f.write(reinterpret_cast<const char*>(&re), sizeof(double));
            f.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
}

Mat import_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("import_binary: cannot open " + path);
    std::int64_t dim = 0;
    f.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (dim <= 0 || dim > kDenseDimCap)
        throw std::runtime_error("import_binary: bad dimension");
    Mat m(dim, dim);
    for (std::int64_t i = 0; i < dim; ++i)
        for (std::int64_t j = 0; j < dim; ++j) {
            double re, im;
            f.read(reinterpret_cast<char*>(&re), sizeof(double));
            f.read(reinterpret_cast<char*>(&im), sizeof(double));
            m(i, j) = cplx(re, im);
        }
    if (!f) throw std::runtime_error("import_binary: truncated file");
    return m;
}

Mat random_hermitian(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(rng), g(rng));
    return 0.5 * (m + m.adjoint()).eval();
}

Mat random_unitary(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ();
    return q;
}

}  // namespace floqflow::dense
