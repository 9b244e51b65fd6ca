#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "floqflow/dense.hpp"
#include "floqflow/flow.hpp"
#include "floqflow/hilbert.hpp"
#include "floqflow/terms.hpp"

namespace floqflow::pauli {

// Canonical packed string: bit i of x / z set iff site i carries an X / Z
// factor; both set means Y. Strings are kept Hermitian by the phase
// convention P = i^{|x&z|} X^x Z^z, so P^2 = 1 and tr(P_a P_b)/dim = delta.
struct PauliString {
    std::uint64_t x = 0;
    std::uint64_t z = 0;

    friend bool operator==(const PauliString&, const PauliString&) = default;

    std::uint64_t support_mask() const { return x | z; }
    int n_body() const { return __builtin_popcountll(support_mask()); }
    bool is_identity() const { return support_mask() == 0; }
    int leftmost() const;   // -1 for identity
    int rightmost() const;  // -1 for identity
    int range() const;      // rightmost - leftmost + 1; 0 for identity
};

struct StringHash {
    std::size_t operator()(const PauliString& s) const {
        std::uint64_t h = s.x * 0x9e3779b97f4a7c15ull;
        h ^= s.z + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return std::size_t(h);
    }
};

PauliString string_from_letters(const std::string& letters);
std::string to_letters(const PauliString& s, int n_spins);

// P_a P_b = phase * P_c; phase in {1, i, -1, -i}.
PauliString string_product(const PauliString& a, const PauliString& b, cplx* phase);
bool strings_commute(const PauliString& a, const PauliString& b);

enum class TruncationKind { none, range_r, n_body };
struct TruncationScheme {
    TruncationKind kind = TruncationKind::none;
    int value = 1;  // max support width r, or max non-identity sites N

    void validate() const;
};

class PauliOperator {
  public:
    using Map = std::unordered_map<PauliString, cplx, StringHash>;

    PauliOperator() = default;
    PauliOperator(int n_spins, double drop_tolerance = 1e-12)
        : n_spins_(n_spins), drop_tolerance_(drop_tolerance) {}

    int n_spins() const { return n_spins_; }
    double drop_tolerance() const { return drop_tolerance_; }
    std::size_t n_strings() const { return terms_.size(); }
    const Map& terms() const { return terms_; }

    cplx coefficient(const PauliString& s) const;
    void add(const PauliString& s, cplx c);
    void scale(cplx alpha);
    void axpy(cplx alpha, const PauliOperator& other);
    PauliOperator adjoint() const;  // strings Hermitian: conjugate coefficients
    void make_hermitian();          // keep the Hermitian part

    // Drops |c| < drop_tolerance * max|c|.
    void drop_small();

    double max_abs_coefficient() const;
    // Deterministic (sorted) term list for serialization and reductions.
    std::vector<std::pair<PauliString, cplx>> sorted_terms() const;

  private:
    int n_spins_ = 0;
    double drop_tolerance_ = 1e-12;
    Map terms_;
};

PauliOperator from_terms(const TermList& tl, double drop_tolerance = 1e-12);

PauliOperator string_commutator(const PauliOperator& a, const PauliOperator& b);

// Removes strings violating the scheme; if removed_norm is given, receives
// the intensive norm of the dropped part.
PauliOperator truncate(const PauliOperator& op, const TruncationScheme& scheme,
                       double* removed_norm = nullptr);

// sqrt(sum |c|^2 / L) — identical to the dense intensive norm.
double intensive_norm(const PauliOperator& op, int norm_sites);

// <target, op> = tr(target^dag op)/dim = sum conj(t_s) c_s.
cplx inner_coefficient(const PauliOperator& op, const PauliOperator& target);

dense::Mat to_dense(const PauliOperator& op, const HilbertSpace& space);
PauliOperator from_dense(const dense::Mat& m, int n_spins, double tol = 1e-12);

// Text form, one term per line: "coefficient letters", e.g. "0.25+0i IXXI".
std::string serialize(const PauliOperator& op);
PauliOperator deserialize(const std::string& text, double drop_tolerance = 1e-12);

struct Backend {
    using Op = PauliOperator;
    int norm_sites;
    TruncationScheme scheme;  // applied by compress() after each RHS stage

    explicit Backend(int L, TruncationScheme s = {}) : norm_sites(L), scheme(s) {}

    Op clone(const Op& a) const { return a; }
    Op zero_like(const Op& a) const {
        return Op(a.n_spins(), a.drop_tolerance());
    }
    void axpy(Op& y, cplx alpha, const Op& x) const { y.axpy(alpha, x); }
    void scale(Op& y, cplx alpha) const { y.scale(alpha); }
    Op adjoint(const Op& a) const { return a.adjoint(); }
    Op commutator(const Op& a, const Op& b) const { return string_commutator(a, b); }
    double norm(const Op& a) const { return intensive_norm(a, norm_sites); }
    void compress(Op& a) const {
        if (scheme.kind != TruncationKind::none) a = truncate(a, scheme);
        a.drop_small();
    }
    void symmetrize(Op& a) const { a.make_hermitian(); }
    double size_metric(const Op& a) const { return double(a.n_strings()); }
};

// Integrates the harmonic flow applying the scheme after every RHS stage.
flow::FlowTrajectory<PauliOperator> truncated_flow(
    const flow::Harmonic<PauliOperator>& initial, const TruncationScheme& scheme,
    int norm_sites, const flow::StepperConfig& cfg);

// Coefficient series of target strings across retained snapshots.
struct CouplingTrace {
    std::vector<double> lambdas;
    std::vector<std::vector<cplx>> series;  // [target][snapshot]
};
CouplingTrace coupling_trace(const flow::FlowTrajectory<PauliOperator>& traj,
                             const std::vector<PauliOperator>& targets);

}  // namespace floqflow::pauli
