#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace floqflow {

enum class Boundary { open, periodic };

// Chain of L sites with a fixed local dimension (2 for spin-1/2, 4 for a
// Hubbard site after the fermion-to-spin mapping). Hard cap on the total
// dimension, default 2^16.
struct HilbertSpace {
    int num_sites = 2;
    int local_dim = 2;
    Boundary boundary = Boundary::open;
    std::int64_t dim_cap = std::int64_t(1) << 16;

    HilbertSpace() = default;
    HilbertSpace(int L, int d, Boundary b = Boundary::open,
                 std::int64_t cap = std::int64_t(1) << 16)
        : num_sites(L), local_dim(d), boundary(b), dim_cap(cap) {
        if (L < 2) throw std::invalid_argument("HilbertSpace: need L >= 2");
        if (d != 2 && d != 4)
            throw std::invalid_argument("HilbertSpace: local_dim must be 2 or 4");
        if (dim() > dim_cap)
            throw std::invalid_argument("HilbertSpace: dimension " +
                                        std::to_string(dim()) + " exceeds cap " +
                                        std::to_string(dim_cap));
    }

    // Spin-1/2 degrees of freedom after mapping (2 per Hubbard site).
    int num_spins() const { return local_dim == 4 ? 2 * num_sites : num_sites; }
    // Spins per translation cell, for momentum sectors.
    int spins_per_cell() const { return local_dim == 4 ? 2 : 1; }

    std::int64_t dim() const { return std::int64_t(1) << num_spins(); }
    bool periodic() const { return boundary == Boundary::periodic; }
};

}  // namespace floqflow
