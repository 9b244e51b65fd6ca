#include "floqflow/block.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace floqflow::block {

namespace {

std::uint64_t translate(std::uint64_t s, int n_spins, int cell) {
    std::uint64_t mask =
        (n_spins == 64) ? ~0ull : ((std::uint64_t(1) << n_spins) - 1);
    return ((s << cell) | (s >> (n_spins - cell))) & mask;
}

// Matrix entries of a Pauli product are coeff * (+-i)^{#Y}, so the term is
// real in the computational basis iff coeff * i^{#Y} is real.
bool term_is_real(const Term& t) {
    int ny = 0;
    for (auto& f : t.factors)
        if (f.op == P::Y) ++ny;
    cplx eff = (ny % 2) ? t.coeff * cplx(0, 1) : t.coeff;
    return std::abs(eff.imag()) <= 1e-14 * std::abs(eff);
}

}  // namespace

std::shared_ptr<const MomentumBasis> build_momentum_basis(const HilbertSpace& space) {
    if (!space.periodic())
        throw std::invalid_argument("momentum basis: periodic boundary required");
    const int n = space.num_spins();
    const int cell = space.spins_per_cell();
    const int N = space.num_sites;  // number of cells
    const std::int64_t dim = space.dim();

    auto basis = std::make_shared<MomentumBasis>();
    basis->space = space;
    basis->n_cells = N;
    basis->rep_index.assign(dim, -1);
    basis->shift.assign(dim, 0);

    // orbit enumeration
    for (std::int64_t s = 0; s < dim; ++s) {
        if (basis->rep_index[s] >= 0) continue;
        // walk the orbit; s is the smallest element seen first in scan order,
        // so it is the representative
        std::int32_t idx = std::int32_t(basis->orbit_reps.size());
        std::uint64_t t = std::uint64_t(s);
        int period = 0;
        do {
            basis->rep_index[t] = idx;
            basis->shift[t] = std::int8_t(period);
            t = translate(t, n, cell);
            ++period;
        } while (t != std::uint64_t(s));
        basis->orbit_reps.push_back(std::uint64_t(s));
        basis->orbit_period.push_back(period);
    }

    const int k_hi = N / 2;
    for (int k = 0; k <= k_hi; ++k) {
        Sector sec;
        sec.k = k;
        sec.weight = (k == 0 || 2 * k == N) ? 1.0 : 2.0;
        for (size_t i = 0; i < basis->orbit_reps.size(); ++i) {
            int R = basis->orbit_period[i];
            // momentum k is compatible with period R iff k*R = 0 mod N
            if ((std::int64_t(k) * R) % N == 0) {
                sec.reps.push_back(basis->orbit_reps[i]);
                sec.periods.push_back(R);
            }
        }
        basis->sectors.push_back(std::move(sec));
    }
    return basis;
}

BlockOp from_terms(const MomentumBasis& basis, const TermList& tl) {
    for (const auto& t : tl.terms)
        if (!term_is_real(t))
            throw std::invalid_argument(
                "block::from_terms: term is not real in the computational basis");

    const int N = basis.n_cells;
    BlockOp out;
    for (const auto& sec : basis.sectors) {
        const std::int64_t d = sec.dim();
        Mat m = Mat::Zero(d, d);
        // map rep -> row index within this sector
        std::unordered_map<std::uint64_t, std::int64_t> row;
        row.reserve(size_t(d) * 2);
        for (std::int64_t i = 0; i < d; ++i) row[sec.reps[i]] = i;

        const double theta = 2.0 * std::numbers::pi * sec.k / N;
        for (std::int64_t a = 0; a < d; ++a) {
            const std::uint64_t sa = sec.reps[a];
            const double Ra = sec.periods[a];
            for (const auto& t : tl.terms) {
                cplx amp;
                std::uint64_t sb = apply_term(t, sa, amp);
                auto ri = basis.rep_index[sb];
                std::uint64_t rep = basis.orbit_reps[ri];
                auto it = row.find(rep);
                if (it == row.end()) continue;  // rep not in this momentum sector
                std::int64_t b = it->second;
                int l = basis.shift[sb];  // sb = T^l rep
                double Rb = sec.periods[b];
                // <b(k)| T^l = e^{+i theta l} <b(k)|
                cplx phase = std::polar(1.0, theta * double(l));
                m(b, a) += amp * phase * std::sqrt(Ra / Rb);
            }
        }
        out.blocks.push_back(std::move(m));
    }
    return out;
}

Mat to_dense(const MomentumBasis& basis, const BlockOp& op) {
    const std::int64_t dim = basis.space.dim();
    const int N = basis.n_cells;
    const int n = basis.space.num_spins();
    const int cell = basis.space.spins_per_cell();
    Mat out = Mat::Zero(dim, dim);
    for (size_t si = 0; si < basis.sectors.size(); ++si) {
        const auto& sec = basis.sectors[si];
        const std::int64_t d = sec.dim();
        if (d == 0) continue;
        // build sector basis vectors as columns
        Mat V = Mat::Zero(dim, d);
        const double theta = 2.0 * std::numbers::pi * sec.k / N;
        for (std::int64_t a = 0; a < d; ++a) {
            std::uint64_t s = sec.reps[a];
            int R = sec.periods[a];
            double nrm = 1.0 / std::sqrt(double(N) * double(N) / double(R));
            std::uint64_t t = s;
            for (int r = 0; r < N; ++r) {
                V(std::int64_t(t), a) += nrm * std::polar(1.0, -theta * double(r));
                t = translate(t, n, cell);
            }
        }
        out += V * op.blocks[si] * V.adjoint();
        if (sec.weight == 2.0) {
            Mat Vc = V.conjugate();
            out += Vc * op.blocks[si].conjugate() * Vc.adjoint();
        }
    }
    return out;
}

double intensive_norm(const MomentumBasis& basis, const BlockOp& op, int norm_sites) {
    double s2 = 0;
    for (size_t i = 0; i < basis.sectors.size(); ++i)
        s2 += basis.sectors[i].weight * op.blocks[i].squaredNorm();
    return std::sqrt(s2 / (double(norm_sites) * double(basis.space.dim())));
}

}  // namespace floqflow::block
