#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdio>

#include "doctest.h"
#include "floqflow/dense.hpp"
#include "floqflow/models.hpp"

using namespace floqflow;
using dense::Mat;

namespace {

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// independent spin operator: S^a on `site` of an n-spin chain via explicit
// Kronecker products (little-endian site order to match the bit convention)
Mat kron_spin(int n, int site, char a) {
    Mat s(2, 2);
    if (a == 'x') s << 0, 0.5, 0.5, 0;
    else if (a == 'y') s << 0, cplx(0, -0.5), cplx(0, 0.5), 0;
    else s << 0.5, 0, 0, -0.5;
    Mat out = Mat::Identity(1, 1);
    for (int i = 0; i < n; ++i)
        out = kron(i == site ? s : Mat(Mat::Identity(2, 2)), out);
    return out;
}

}  // namespace

TEST_SUITE("dense") {

TEST_CASE("intensive norm of the identity is 1/sqrt(L)") {
    for (int L : {2, 4, 5}) {
        Mat id = Mat::Identity(1 << L, 1 << L);
        CHECK(dense::intensive_norm(id, L) == doctest::Approx(1.0 / std::sqrt(L)).epsilon(1e-14));
    }
}

TEST_CASE("intensive norm of sum of S^z is 1/2") {
    const int L = 5;
    TermList tl;
    tl.n_spins = L;
    for (int i = 0; i < L; ++i) tl.add(0.5, {{i, P::Z}});
    CHECK(dense::intensive_norm(dense::from_terms(tl), L) ==
          doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("intensive norm equals brute-force trace on a random Hermitian") {
    const int L = 4, dim = 16;
    Mat a = dense::random_hermitian(dim, 7);
    double tr = (a.adjoint() * a).trace().real();
    CHECK(dense::intensive_norm(a, L) ==
          doctest::Approx(std::sqrt(tr / (L * dim))).epsilon(1e-13));
}

TEST_CASE("intensive norm is unitarily invariant") {
    const int dim = 16;
    Mat a = dense::random_hermitian(dim, 3);
    Mat u = dense::random_unitary(dim, 5);
    CHECK(std::abs(dense::intensive_norm(u * a * u.adjoint(), 4) -
                   dense::intensive_norm(a, 4)) < 1e-10);
}

TEST_CASE("commutator of single-site spins: [S^x, S^y] = i S^z") {
    Mat sx = 0.5 * dense::site_operator(2, 0, P::X);
    Mat sy = 0.5 * dense::site_operator(2, 0, P::Y);
    Mat sz = 0.5 * dense::site_operator(2, 0, P::Z);
    CHECK((dense::commutator(sx, sy) - cplx(0, 1) * sz).norm() < 1e-14);
    CHECK(dense::commutator(sx, sx).norm() == 0.0);
}

TEST_CASE("commutator matches entrywise matrix-product oracle") {
    const int L = 4;
    TermList za, xx;
    za.n_spins = xx.n_spins = L;
    for (int i = 0; i < L; ++i) za.add(0.5, {{i, P::Z}});
    for (int i = 0; i + 1 < L; ++i) xx.add(0.25, {{i, P::X}, {i + 1, P::X}});
    Mat a = dense::from_terms(za), b = dense::from_terms(xx);
    CHECK((dense::commutator(a, b) - (a * b - b * a)).norm() < 1e-14);
}

TEST_CASE("inner_coefficient: single-term expansion and orthogonality") {
    const int L = 3;
    Mat basis = kron_spin(L, 0, 'x') * kron_spin(L, 1, 'x');
    Mat op = 2.0 * basis;
    // <basis, op> = 2 * tr(basis^2)/dim = 2/16
    CHECK(std::abs(dense::inner_coefficient(op, basis) - cplx(2.0 / 16.0)) < 1e-14);
    Mat orth = kron_spin(L, 2, 'z');
    CHECK(std::abs(dense::inner_coefficient(op, orth)) < 1e-14);
    // linear in op, conjugate-linear in basis
    CHECK(std::abs(dense::inner_coefficient(cplx(0, 3) * op, basis) -
                   cplx(0, 3) * dense::inner_coefficient(op, basis)) < 1e-14);
    CHECK(std::abs(dense::inner_coefficient(op, cplx(0, 2) * basis) -
                   std::conj(cplx(0, 2)) * dense::inner_coefficient(op, basis)) <
          1e-13);
}

TEST_CASE("binary export/import round trip") {
    Mat a = dense::random_hermitian(8, 11);
    const std::string path = "/tmp/floqflow_dense_rt.bin";
    dense::export_binary(a, path);
    CHECK((dense::import_binary(path) - a).norm() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("deterministic random fixtures") {
    CHECK((dense::random_hermitian(8, 42) - dense::random_hermitian(8, 42)).norm() == 0.0);
    Mat u = dense::random_unitary(8, 42);
    CHECK((u.adjoint() * u - Mat::Identity(8, 8)).norm() < 1e-12);
}

}  // suite dense

TEST_SUITE("models") {

TEST_CASE("driven Ising L=2 open, fields off: H0 = -Sx Sx, H1 = 0") {
    HilbertSpace space(2, 2, Boundary::open);
    models::ModelParams p;
    p.J = 1;
    p.h_z = p.h_x = p.A = 0;
    p.omega = 3.5;
    auto ht = models::build_driven_ising(space, p);
    Mat want = -kron_spin(2, 0, 'x') * kron_spin(2, 1, 'x');
    CHECK((dense::from_terms(ht.h0) - want).norm() < 1e-14);
    CHECK(ht.h1.empty());
}

TEST_CASE("driven Ising L=4 periodic matches Kronecker-product oracle") {
    const int L = 4;
    HilbertSpace space(L, 2, Boundary::periodic);
    models::ModelParams p;
    p.J = 1;
    p.h_z = 0.7;
    p.h_x = 0.4;
    p.A = 0.5;
    p.omega = 3.5;
    auto ht = models::build_driven_ising(space, p);
    Mat h0 = Mat::Zero(16, 16), h1 = Mat::Zero(16, 16);
    for (int i = 0; i < L; ++i) {
        h0 += -p.J * kron_spin(L, i, 'x') * kron_spin(L, (i + 1) % L, 'x');
        h0 += p.h_z * kron_spin(L, i, 'z') + p.h_x * kron_spin(L, i, 'x');
        h1 += 0.5 * p.A * kron_spin(L, i, 'z');
    }
    CHECK((dense::from_terms(ht.h0) - h0).norm() < 1e-13);
    CHECK((dense::from_terms(ht.h1) - h1).norm() < 1e-13);
}

TEST_CASE("exponential Ising: L_J -> 0+ reduces to nearest-neighbor Ising") {
    HilbertSpace space(5, 2, Boundary::open);
    models::ModelParams p;
    p.J = 1;
    p.h_z = 0.3;
    p.h_x = 0.2;
    p.A = 0.5;
    p.omega = 3;
    p.L_J = 0.02;  // e^{-1/L_J} ~ 2e-22, below the range drop tolerance
    auto exp_ht = models::build_exponential_ising(space, p);
    auto nn_ht = models::build_driven_ising(space, p);
    CHECK((dense::from_terms(exp_ht.h0) - dense::from_terms(nn_ht.h0)).norm() < 1e-13);
}

TEST_CASE("exponential Ising long-range coefficient e^{-(j-i-1)/L_J}") {
    const int L = 6;
    HilbertSpace space(L, 2, Boundary::open);
    models::ModelParams p;
    p.J = 1;
    p.h_z = p.h_x = p.A = 0;
    p.omega = 3;
    p.L_J = 0.5;
    auto ht = models::build_exponential_ising(space, p);
    Mat h0 = dense::from_terms(ht.h0);
    // coefficient extraction of the (site 0, site 3) coupling
    Mat basis = kron_spin(L, 0, 'x') * kron_spin(L, 3, 'x');
    cplx c = dense::inner_coefficient(h0, basis);
    // term is -J e^{-4} S^x S^x; <basis, basis> = 1/16
    CHECK(std::abs(c - cplx(-std::exp(-4.0) / 16.0)) < 1e-15);
}

TEST_CASE("Heisenberg: A=0 gives empty drive; L=3 matches brute force") {
    HilbertSpace space(3, 2, Boundary::periodic);
    models::ModelParams p;
    p.J = 1;
    p.Jp = 0;
    p.A = 0;
    p.omega = 3.5;
    auto ht = models::build_heisenberg_jjprime(space, p);
    CHECK(ht.h1.empty());
    Mat h0 = Mat::Zero(8, 8);
    for (int i = 0; i < 3; ++i)
        for (char a : {'x', 'y', 'z'})
            h0 += kron_spin(3, i, a) * kron_spin(3, (i + 1) % 3, a);
    CHECK((dense::from_terms(ht.h0) - h0).norm() < 1e-13);
}

TEST_CASE("Hubbard: t_h=0 gives diagonal H0 with per-site {0, U} eigenvalues") {
    HilbertSpace space(2, 4, Boundary::open);
    models::ModelParams p;
    p.t_h = 0;
    p.U = 1.7;
    p.A = 0;
    p.omega = 1;
    auto ht = models::build_driven_hubbard(space, p);
    Mat h0 = dense::from_terms(ht.h0);
    CHECK((h0 - Mat(h0.diagonal().asDiagonal())).norm() < 1e-14);
    for (int i = 0; i < h0.rows(); ++i) {
        double v = h0(i, i).real();
        bool ok = std::abs(v) < 1e-12 || std::abs(v - p.U) < 1e-12 ||
                  std::abs(v - 2 * p.U) < 1e-12;
        CHECK(ok);
    }
}

TEST_CASE("Hubbard L=2 matches an independently built two-site oracle") {
    HilbertSpace space(2, 4, Boundary::open);
    models::ModelParams p;
    p.t_h = 0.9;
    p.U = 2.1;
    p.A = 0.6;
    p.L_hop = 1.0;
    p.omega = 2;
    auto ht = models::build_driven_hubbard(space, p);

    // independent construction: 4 JW modes (up0, dn0, up1, dn1), fermion
    // operator c_k = (prod_{j<k} Z_j) (X_k + iY_k)/2 in sigma convention
    const int n = 4;
    auto mode_op = [&](int k, bool dagger) {
        Mat sp(2, 2);
        // (X + iY)/2 lowers the bit convention 0=up(z=+1): annihilation of an
        // occupied mode; occupation n = (1 - Z)/2, so |1> is the z=-1 state
        sp << 0, 0, 1, 0;  // raises bit 0 -> 1 : creation
        Mat op = dagger ? sp : Mat(sp.adjoint().eval());
        Mat full = Mat::Identity(1, 1);
        for (int j = 0; j < n; ++j) {
            Mat f;
            if (j < k) {
                f = Mat(2, 2);
                f << 1, 0, 0, -1;  // JW parity string
            } else if (j == k) {
                f = op;
            } else {
                f = Mat::Identity(2, 2);
            }
            full = kron(f, full);
        }
        return full;
    };
    auto number = [&](int k) { return Mat(mode_op(k, true) * mode_op(k, false)); };
    // mode order matches jw_mode: up at 2i, dn at 2i+1
    Mat h0 = Mat::Zero(16, 16);
    for (int sigma = 0; sigma < 2; ++sigma) {
        int f = sigma, g = 2 + sigma;
        h0 += p.t_h * (mode_op(f, true) * mode_op(g, false) +
                       mode_op(g, true) * mode_op(f, false));
    }
    h0 += p.U * (number(0) * number(1) + number(2) * number(3));
    Mat h1 = 0.5 * p.A * (number(0) * number(1) + number(2) * number(3));
    CHECK((dense::from_terms(ht.h0) - h0).norm() < 1e-12);
    CHECK((dense::from_terms(ht.h1) - h1).norm() < 1e-12);
}

TEST_CASE("builders produce Hermitian H0 and translation-invariant operators") {
    models::ModelParams p;
    p.J = 1;
    p.h_z = 0.7;
    p.h_x = 0.4;
    p.A = 0.5;
    p.Jp = 0.6;
    p.omega = 3.5;
    for (std::string name : {"driven_ising", "heisenberg_jjprime"}) {
        HilbertSpace space(4, 2, Boundary::periodic);
        auto ht = models::build_model(name, space, p);
        Mat h0 = dense::from_terms(ht.h0);
        CHECK(dense::is_hermitian(h0));
        Mat t = dense::translation_operator(space);
        CHECK((h0 * t - t * h0).norm() < 1e-12);
        Mat h1 = dense::from_terms(ht.h1);
        CHECK((h1 * t - t * h1).norm() < 1e-12);
    }
}

TEST_CASE("cross-term flag switches the exponential exchange to Sx Sy") {
    HilbertSpace space(3, 2, Boundary::open);
    models::ModelParams p;
    p.J = 1;
    p.h_z = p.h_x = p.A = 0;
    p.omega = 3;
    p.L_J = 0.5;
    p.cross_term = true;
    auto ht = models::build_exponential_ising(space, p);
    Mat h0 = dense::from_terms(ht.h0);
    Mat basis = kron_spin(3, 0, 'x') * kron_spin(3, 1, 'y');
    CHECK(std::abs(dense::inner_coefficient(h0, basis) - cplx(-1.0 / 16.0)) < 1e-14);
}

}  // suite models
