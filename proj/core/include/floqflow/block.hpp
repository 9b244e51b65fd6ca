#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "floqflow/dense.hpp"
#include "floqflow/hilbert.hpp"
#include "floqflow/terms.hpp"

namespace floqflow::block {

using Mat = Eigen::MatrixXcd;

// Translation-symmetry-adapted basis for periodic chains: one sector per
// momentum index k. For Hamiltonians that are real in the computational
// basis, sector -k is the complex conjugate of sector k, so only
// k = 0..floor(N/2) are stored, with multiplicity weights for traces.
struct Sector {
    int k = 0;                     // momentum index, phase e^{-i 2 pi k r / N}
    double weight = 1.0;           // 1 for self-conjugate sectors, else 2
    std::vector<std::uint64_t> reps;
    std::vector<int> periods;      // orbit period R per representative
    std::int64_t dim() const { return std::int64_t(reps.size()); }
};

struct MomentumBasis {
    HilbertSpace space;
    int n_cells = 0;
    std::vector<Sector> sectors;

    // rep lookup: state -> (rep index in orbit table, shift l with
    // state = T^l rep). Dense arrays over the full Hilbert space.
    std::vector<std::int32_t> rep_index;  // index into orbit_reps
    std::vector<std::int8_t> shift;
    std::vector<std::uint64_t> orbit_reps;
    std::vector<int> orbit_period;

    std::int64_t total_dim() const {
        std::int64_t d = 0;
        for (auto& s : sectors) d += s.dim();
        return d;
    }
};

std::shared_ptr<const MomentumBasis> build_momentum_basis(const HilbertSpace& space);

// Block-diagonal operator: one dense matrix per stored sector.
struct BlockOp {
    std::vector<Mat> blocks;
};

// Requires every term to be real in the computational basis (even number of
// Y letters, real coefficient); throws otherwise.
BlockOp from_terms(const MomentumBasis& basis, const TermList& tl);

// Embeds the stored sectors (and their conjugates) back into the full
// Hilbert space; test/oracle use only, small L.
Mat to_dense(const MomentumBasis& basis, const BlockOp& op);

double intensive_norm(const MomentumBasis& basis, const BlockOp& op, int norm_sites);

struct Backend {
    using Op = BlockOp;
    std::shared_ptr<const MomentumBasis> basis;
    int norm_sites;

    explicit Backend(std::shared_ptr<const MomentumBasis> b)
        : basis(std::move(b)), norm_sites(basis->space.num_sites) {}

    Op clone(const Op& a) const { return a; }
    Op zero_like(const Op& a) const {
        Op z;
        z.blocks.reserve(a.blocks.size());
        for (auto& m : a.blocks) z.blocks.push_back(Mat::Zero(m.rows(), m.cols()));
        return z;
    }
    void axpy(Op& y, cplx alpha, const Op& x) const {
        for (size_t i = 0; i < y.blocks.size(); ++i)
            y.blocks[i].noalias() += alpha * x.blocks[i];
    }
    void scale(Op& y, cplx alpha) const {
        for (auto& m : y.blocks) m *= alpha;
    }
    Op adjoint(const Op& a) const {
        Op r;
        r.blocks.reserve(a.blocks.size());
        for (auto& m : a.blocks) r.blocks.push_back(m.adjoint());
        return r;
    }
    Op commutator(const Op& a, const Op& b) const {
        Op r;
        r.blocks.reserve(a.blocks.size());
        for (size_t i = 0; i < a.blocks.size(); ++i)
            r.blocks.push_back(dense::commutator(a.blocks[i], b.blocks[i]));
        return r;
    }
    double norm(const Op& a) const { return intensive_norm(*basis, a, norm_sites); }
    void compress(Op&) const {}
    void symmetrize(Op& a) const {
        for (auto& m : a.blocks) m = 0.5 * (m + m.adjoint()).eval();
    }
    double size_metric(const Op&) const { return 0.0; }
};

}  // namespace floqflow::block
