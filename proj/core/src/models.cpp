#include "floqflow/models.hpp"

#include <cmath>
#include <stdexcept>

namespace floqflow::models {

void ModelParams::validate() const {
    if (omega <= 0) throw std::invalid_argument("ModelParams: omega must be > 0");
    if (L_J <= 0 || L_hop <= 0)
        throw std::invalid_argument("ModelParams: decay lengths must be > 0");
}

namespace {

void require_spin_half(const HilbertSpace& space) {
    if (space.local_dim != 2)
        throw std::invalid_argument("model: needs a spin-1/2 space (local_dim 2)");
}

// S = sigma/2 lives here, not in the string algebra.
constexpr double S = 0.5;

void add_drive_sz(TermList& h1, int L, double A) {
    for (int i = 0; i < L; ++i) h1.add(0.5 * A * S, {{i, P::Z}});
}

}  // namespace

HarmonicTerms build_driven_ising(const HilbertSpace& space, const ModelParams& p) {
    require_spin_half(space);
    p.validate();
    const int L = space.num_sites;
    HarmonicTerms out{p.omega, {}, {}};
    out.h0.n_spins = out.h1.n_spins = L;
    const int nbonds = space.periodic() ? L : L - 1;
    for (int i = 0; i < nbonds; ++i)
        out.h0.add(-p.J * S * S, {{i, P::X}, {(i + 1) % L, P::X}});
    for (int i = 0; i < L; ++i) {
        out.h0.add(p.h_z * S, {{i, P::Z}});
        out.h0.add(p.h_x * S, {{i, P::X}});
    }
    add_drive_sz(out.h1, L, p.A);
    return out;
}

HarmonicTerms build_exponential_ising(const HilbertSpace& space, const ModelParams& p) {
    require_spin_half(space);
    p.validate();
    if (space.periodic())
        throw std::invalid_argument("exponential Ising: open boundary only");
    const int L = space.num_sites;
    HarmonicTerms out{p.omega, {}, {}};
    out.h0.n_spins = out.h1.n_spins = L;
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
            double w = std::exp(-double(j - i - 1) / p.L_J);
            if (w < kRangeDropTol) break;
            out.h0.add(-p.J * w * S * S,
                       {{i, P::X}, {j, p.cross_term ? P::Y : P::X}});
        }
    for (int i = 0; i < L; ++i) {
        out.h0.add(p.h_x * S, {{i, P::X}});
        out.h0.add(p.h_z * S, {{i, P::Z}});
    }
    add_drive_sz(out.h1, L, p.A);
    return out;
}

HarmonicTerms build_heisenberg_jjprime(const HilbertSpace& space, const ModelParams& p) {
    require_spin_half(space);
    p.validate();
    const int L = space.num_sites;
    HarmonicTerms out{p.omega, {}, {}};
    out.h0.n_spins = out.h1.n_spins = L;
    auto add_exchange = [L](TermList& tl, double coeff, int i, int j) {
        i %= L;
        j %= L;
        for (P a : {P::X, P::Y, P::Z}) tl.add(coeff * S * S, {{i, a}, {j, a}});
    };
    const int nn = space.periodic() ? L : L - 1;
    const int nnn = space.periodic() ? L : L - 2;
    for (int i = 0; i < nn; ++i) {
        add_exchange(out.h0, p.J, i, i + 1);
        add_exchange(out.h1, 0.5 * p.A, i, i + 1);
    }
    for (int i = 0; i < nnn; ++i) add_exchange(out.h0, p.Jp, i, i + 2);
    return out;
}

HarmonicTerms build_driven_hubbard(const HilbertSpace& space, const ModelParams& p) {
    if (space.local_dim != 4)
        throw std::invalid_argument("hubbard: needs local_dim 4");
    p.validate();
    if (space.periodic())
        throw std::invalid_argument("hubbard: open boundary only");
    const int L = space.num_sites;
    const int n = 2 * L;
    HarmonicTerms out{p.omega, {}, {}};
    out.h0.n_spins = out.h1.n_spins = n;

    // hopping with Jordan-Wigner strings over modes between f and g:
    // c^dag_f c_g + h.c. = (X_f Z...Z X_g + Y_f Z...Z Y_g) / 2
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
            double w = std::exp(-double(j - i - 1) / p.L_hop);
            if (w < kRangeDropTol) break;
            for (int sigma = 0; sigma < 2; ++sigma) {
                int f = jw_mode(i, sigma), g = jw_mode(j, sigma);
                std::vector<TermFactor> fx{{f, P::X}}, fy{{f, P::Y}};
                for (int k = f + 1; k < g; ++k) {
                    fx.push_back({k, P::Z});
                    fy.push_back({k, P::Z});
                }
                fx.push_back({g, P::X});
                fy.push_back({g, P::Y});
                out.h0.add(0.5 * p.t_h * w, fx);
                out.h0.add(0.5 * p.t_h * w, fy);
            }
        }

    // n_up n_down = (1 - Z_up)(1 - Z_down)/4
    auto add_interaction = [L](TermList& tl, double u) {
        for (int i = 0; i < L; ++i) {
            int up = jw_mode(i, 0), dn = jw_mode(i, 1);
            tl.add(0.25 * u, {});
            tl.add(-0.25 * u, {{up, P::Z}});
            tl.add(-0.25 * u, {{dn, P::Z}});
            tl.add(0.25 * u, {{up, P::Z}, {dn, P::Z}});
        }
    };
    add_interaction(out.h0, p.U);
    add_interaction(out.h1, 0.5 * p.A);
    return out;
}

HarmonicTerms build_model(const std::string& name, const HilbertSpace& space,
                          const ModelParams& p) {
    if (name == "driven_ising") return build_driven_ising(space, p);
    if (name == "exponential_ising") return build_exponential_ising(space, p);
    if (name == "heisenberg_jjprime") return build_heisenberg_jjprime(space, p);
    if (name == "driven_hubbard") return build_driven_hubbard(space, p);
    throw std::invalid_argument("unknown model: " + name);
}

}  // namespace floqflow::models
