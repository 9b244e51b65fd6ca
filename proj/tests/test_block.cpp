#include <cmath>

#include "doctest.h"
#include "floqflow/block.hpp"
#include "floqflow/dense.hpp"
#include "floqflow/models.hpp"

using namespace floqflow;
using dense::Mat;

namespace {

models::HarmonicTerms ising_terms(int L) {
    HilbertSpace space(L, 2, Boundary::periodic);
    models::ModelParams p;
    p.J = 1;
    p.h_z = 0.7;
    p.h_x = 0.4;
    p.A = 0.5;
    p.omega = 3.5;
    return models::build_driven_ising(space, p);
}

}  // namespace

TEST_SUITE("block") {

TEST_CASE("weighted sector dimensions cover the full Hilbert space") {
    for (int L : {4, 6, 7}) {
        HilbertSpace space(L, 2, Boundary::periodic);
        auto basis = block::build_momentum_basis(space);
        double total = 0;
        for (const auto& s : basis->sectors) total += s.weight * double(s.dim());
        CHECK(total == doctest::Approx(double(1 << L)));
    }
}

TEST_CASE("block embedding reproduces the dense operator") {
    const int L = 6;
    HilbertSpace space(L, 2, Boundary::periodic);
    auto basis = block::build_momentum_basis(space);
    auto ht = ising_terms(L);
    auto b0 = block::from_terms(*basis, ht.h0);
    Mat embedded = block::to_dense(*basis, b0);
    Mat direct = dense::from_terms(ht.h0);
    CHECK((embedded - direct).norm() < 1e-11);
}

TEST_CASE("block intensive norm matches dense") {
    const int L = 6;
    HilbertSpace space(L, 2, Boundary::periodic);
    auto basis = block::build_momentum_basis(space);
    auto ht = ising_terms(L);
    auto b0 = block::from_terms(*basis, ht.h0);
    CHECK(std::abs(block::intensive_norm(*basis, b0, L) -
                   dense::intensive_norm(dense::from_terms(ht.h0), L)) < 1e-12);
}

TEST_CASE("sector-wise commutator agrees with the dense commutator") {
    const int L = 4;
    HilbertSpace space(L, 2, Boundary::periodic);
    auto basis = block::build_momentum_basis(space);
    auto ht = ising_terms(L);
    block::Backend b(basis);
    auto b0 = block::from_terms(*basis, ht.h0);
    auto b1 = block::from_terms(*basis, ht.h1);
    Mat lhs = block::to_dense(*basis, b.commutator(b0, b1));
    Mat rhs = dense::commutator(dense::from_terms(ht.h0), dense::from_terms(ht.h1));
    CHECK((lhs - rhs).norm() < 1e-11);
}

TEST_CASE("backend algebra: adjoint involution, commutator antisymmetry") {
    const int L = 4;
    HilbertSpace space(L, 2, Boundary::periodic);
    auto basis = block::build_momentum_basis(space);
    auto ht = ising_terms(L);
    block::Backend b(basis);
    auto a = block::from_terms(*basis, ht.h0);
    auto c = block::from_terms(*basis, ht.h1);
    auto ada = b.adjoint(b.adjoint(a));
    double diff = 0;
    for (size_t k = 0; k < a.blocks.size(); ++k)
        diff += (ada.blocks[k] - a.blocks[k]).norm();
    CHECK(diff < 1e-14);
    auto ab = b.commutator(a, c);
    auto ba = b.commutator(c, a);
    b.axpy(ab, 1.0, ba);
    CHECK(b.norm(ab) < 1e-13);
}

}  // suite block
