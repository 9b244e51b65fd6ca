#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "floqflow/hilbert.hpp"

namespace floqflow {

using cplx = std::complex<double>;

// Single-site Pauli letter. Model builders work in sigma conventions and
// absorb the spin-1/2 factor S = sigma/2 into coefficients.
enum class P : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

struct TermFactor {
    int site;
    P op;
};

// coeff * prod_k sigma^{op_k}_{site_k}, sites distinct.
struct Term {
    cplx coeff;
    std::vector<TermFactor> factors;  // sorted by site, no identities

    Term() = default;
    Term(cplx c, std::vector<TermFactor> f) : coeff(c), factors(std::move(f)) {
        std::sort(factors.begin(), factors.end(),
                  [](const TermFactor& a, const TermFactor& b) { return a.site < b.site; });
        for (size_t i = 1; i < factors.size(); ++i)
            if (factors[i].site == factors[i - 1].site)
                throw std::invalid_argument("Term: repeated site");
    }
};

// Sum of Pauli products on n_spins spin-1/2 sites.
struct TermList {
    int n_spins = 0;
    std::vector<Term> terms;

    void add(cplx c, std::vector<TermFactor> f) {
        if (std::abs(c) == 0.0) return;
        Term t(c, std::move(f));
        for (const auto& fac : t.factors)
            if (fac.site < 0 || fac.site >= n_spins)
                throw std::invalid_argument("TermList: site out of range");
        terms.push_back(std::move(t));
    }

    bool empty() const { return terms.empty(); }
};

// Action of a single sigma letter on a basis bit (0 = up, z-eigenvalue +1).
// Returns the new bit; multiplies phase in place.
inline int apply_letter(P op, int bit, cplx& phase) {
    switch (op) {
        case P::I: return bit;
        case P::X: return 1 - bit;
        case P::Y:
            phase *= cplx(0.0, bit ? -1.0 : 1.0);
            return 1 - bit;
        case P::Z:
            if (bit) phase = -phase;
            return bit;
    }
    return bit;
}

// Applies a term to a computational basis state. Returns the target state
// index and accumulates coeff*phase into amp.
inline std::uint64_t apply_term(const Term& t, std::uint64_t state, cplx& amp) {
    cplx phase = t.coeff;
    std::uint64_t out = state;
    for (const auto& f : t.factors) {
        int bit = int((out >> f.site) & 1u);
        int nb = apply_letter(f.op, bit, phase);
        if (nb != bit) out ^= (std::uint64_t(1) << f.site);
    }
    amp = phase;
    return out;
}

}  // namespace floqflow
