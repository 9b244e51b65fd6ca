#pragma once

#include <optional>
#include <string>

#include "floqflow/hilbert.hpp"
#include "floqflow/terms.hpp"

namespace floqflow::models {

// Named couplings, in units of the leading coupling (J, or U for Hubbard
// scans). hbar = 1, time in inverse energy.
struct ModelParams {
    double omega = 1.0;  // drive frequency, > 0
    double J = 1.0;
    double h_z = 0.0;
    double h_x = 0.0;
    double A = 0.0;   // cosine drive amplitude
    double L_J = 1.0; // Ising exchange decay length
    double Jp = 0.0;  // next-nearest Heisenberg exchange J'
    double t_h = 1.0; // Hubbard hopping
    double U = 1.0;   // Hubbard on-site repulsion
    double L_hop = 1.0;  // Hubbard hopping decay length
    // Eq-variant flag: exchange S^x_i S^y_j instead of S^x_i S^x_j in the
    // exponential Ising model (see README notes).
    bool cross_term = false;

    void validate() const;
};

// Harmonic content of a driven model as term lists: H(t) = H0 + H1 e^{i w t}
// + H1^dag e^{-i w t}. A cos(w t) X enters as H1 = (A/2) X, so the bare
// model is reproduced exactly.
struct HarmonicTerms {
    double omega;
    TermList h0;
    TermList h1;
};

// Couplings below 1e-14 of the leading coefficient are dropped in the
// exponentially-ranged builders.
constexpr double kRangeDropTol = 1e-14;

HarmonicTerms build_driven_ising(const HilbertSpace& space, const ModelParams& p);
HarmonicTerms build_exponential_ising(const HilbertSpace& space, const ModelParams& p);
HarmonicTerms build_heisenberg_jjprime(const HilbertSpace& space, const ModelParams& p);
HarmonicTerms build_driven_hubbard(const HilbertSpace& space, const ModelParams& p);

HarmonicTerms build_model(const std::string& name, const HilbertSpace& space,
                          const ModelParams& p);

// Jordan-Wigner mode index: up fermions on even sub-indices, down on odd.
inline int jw_mode(int site, int spin_down) { return 2 * site + spin_down; }

}  // namespace floqflow::models
