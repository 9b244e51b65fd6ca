#include "floqflow/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace floqflow::pauli {

namespace {
constexpr cplx kPhases[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};  // i^k
}

int PauliString::leftmost() const {
    const auto m = support_mask();
    return m ? __builtin_ctzll(m) : -1;
}

int PauliString::rightmost() const {
    const auto m = support_mask();
    return m ? 63 - __builtin_clzll(m) : -1;
}

int PauliString::range() const {
    return is_identity() ? 0 : rightmost() - leftmost() + 1;
}

PauliString string_from_letters(const std::string& letters) {
    if (letters.size() > 64)
        throw std::invalid_argument("string_from_letters: > 64 sites");
    PauliString s;
    for (size_t i = 0; i < letters.size(); ++i) {
        const std::uint64_t bit = std::uint64_t(1) << i;
        switch (letters[i]) {
            case 'I': case '1': break;
            case 'X': s.x |= bit; break;
            case 'Y': s.x |= bit; s.z |= bit; break;
            case 'Z': s.z |= bit; break;
            default:
                throw std::invalid_argument("string_from_letters: bad letter");
        }
    }
    return s;
}

std::string to_letters(const PauliString& s, int n_spins) {
    std::string out(size_t(n_spins), 'I');
    for (int i = 0; i < n_spins; ++i) {
        const std::uint64_t bit = std::uint64_t(1) << i;
        const bool xb = s.x & bit, zb = s.z & bit;
        if (xb && zb) out[size_t(i)] = 'Y';
        else if (xb) out[size_t(i)] = 'X';
        else if (zb) out[size_t(i)] = 'Z';
    }
    return out;
}

PauliString string_product(const PauliString& a, const PauliString& b,
                           cplx* phase) {
    PauliString c{a.x ^ b.x, a.z ^ b.z};
    if (phase) {
        // i^{|xa&za|} X Z * i^{|xb&zb|} X Z with Z^za X^xb = (-1)^{|za&xb|} ...
        const int q = __builtin_popcountll(a.x & a.z) +
                      __builtin_popcountll(b.x & b.z) -
                      __builtin_popcountll(c.x & c.z) +
                      2 * __builtin_popcountll(a.z & b.x);
        *phase = kPhases[((q % 4) + 4) % 4];
    }
    return c;
}

bool strings_commute(const PauliString& a, const PauliString& b) {
    return ((__builtin_popcountll(a.x & b.z) +
             __builtin_popcountll(a.z & b.x)) & 1) == 0;
}

void TruncationScheme::validate() const {
    if (kind != TruncationKind::none && value < 1)
        throw std::invalid_argument("TruncationScheme: parameter >= 1 required");
}

cplx PauliOperator::coefficient(const PauliString& s) const {
    auto it = terms_.find(s);
    return it == terms_.end() ? cplx{0, 0} : it->second;
}

void PauliOperator::add(const PauliString& s, cplx c) {
    auto [it, inserted] = terms_.try_emplace(s, c);
    if (!inserted) {
        it->second += c;
        if (it->second == cplx{0, 0}) terms_.erase(it);
    }
}

void PauliOperator::scale(cplx alpha) {
    if (alpha == cplx{0, 0}) {
        terms_.clear();
        return;
    }
    for (auto& [s, c] : terms_) c *= alpha;
}

void PauliOperator::axpy(cplx alpha, const PauliOperator& other) {
    for (auto& [s, c] : other.terms_) add(s, alpha * c);
}

PauliOperator PauliOperator::adjoint() const {
    PauliOperator r(n_spins_, drop_tolerance_);
    for (auto& [s, c] : terms_) r.terms_.emplace(s, std::conj(c));
    return r;
}

void PauliOperator::make_hermitian() {
    for (auto it = terms_.begin(); it != terms_.end();) {
        it->second = cplx{it->second.real(), 0};
        if (it->second == cplx{0, 0}) it = terms_.erase(it);
        else ++it;
    }
}

double PauliOperator::max_abs_coefficient() const {
    double m = 0;
    for (auto& [s, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

void PauliOperator::drop_small() {
    const double cut = drop_tolerance_ * max_abs_coefficient();
    if (cut <= 0) return;
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) < cut) it = terms_.erase(it);
        else ++it;
    }
}

std::vector<std::pair<PauliString, cplx>> PauliOperator::sorted_terms() const {
    std::vector<std::pair<PauliString, cplx>> v(terms_.begin(), terms_.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return a.first.z != b.first.z ? a.first.z < b.first.z
                                      : a.first.x < b.first.x;
    });
    return v;
}

PauliOperator from_terms(const TermList& tl, double drop_tolerance) {
    PauliOperator op(tl.n_spins, drop_tolerance);
    for (auto& t : tl.terms) {
        PauliString s;
        for (auto& f : t.factors) {
            const std::uint64_t bit = std::uint64_t(1) << f.site;
            switch (f.op) {
                case P::I: break;
                case P::X: s.x |= bit; break;
                case P::Y: s.x |= bit; s.z |= bit; break;
                case P::Z: s.z |= bit; break;
            }
        }
        op.add(s, t.coeff);
    }
    return op;
}

PauliOperator string_commutator(const PauliOperator& a, const PauliOperator& b) {
    if (a.n_spins() != b.n_spins())
        throw std::invalid_argument("string_commutator: chain length mismatch");
    PauliOperator r(a.n_spins(), std::min(a.drop_tolerance(), b.drop_tolerance()));
    for (auto& [sa, ca] : a.terms()) {
        for (auto& [sb, cb] : b.terms()) {
            if (strings_commute(sa, sb)) continue;
            cplx phase;
            const PauliString sc = string_product(sa, sb, &phase);
            r.add(sc, 2.0 * phase * ca * cb);  // [A,B] = 2AB when {A,B} = 0
        }
    }
    return r;
}

PauliOperator truncate(const PauliOperator& op, const TruncationScheme& scheme,
                       double* removed_norm) {
    scheme.validate();
    PauliOperator r(op.n_spins(), op.drop_tolerance());
    double removed2 = 0;
    for (auto& [s, c] : op.terms()) {
        const bool keep =
            scheme.kind == TruncationKind::none ||
            (scheme.kind == TruncationKind::range_r ? s.range() <= scheme.value
                                                    : s.n_body() <= scheme.value);
        if (keep) r.add(s, c);
        else removed2 += std::norm(c);
    }
    if (removed_norm) *removed_norm = std::sqrt(removed2 / op.n_spins());
    return r;
}

double intensive_norm(const PauliOperator& op, int norm_sites) {
    double s2 = 0;
    for (auto& [s, c] : op.terms()) s2 += std::norm(c);
    return std::sqrt(s2 / norm_sites);
}

cplx inner_coefficient(const PauliOperator& op, const PauliOperator& target) {
    cplx acc{0, 0};
    const auto& small = target.n_strings() < op.n_strings() ? target : op;
    const auto& big = target.n_strings() < op.n_strings() ? op : target;
    const bool small_is_target = &small == &target;
    for (auto& [s, c] : small.terms()) {
        const cplx other = big.coefficient(s);
        acc += small_is_target ? std::conj(c) * other : std::conj(other) * c;
    }
    return acc;
}

dense::Mat to_dense(const PauliOperator& op, const HilbertSpace& space) {
    const auto n = space.num_spins();
    if (n != op.n_spins())
        throw std::invalid_argument("to_dense: spin count mismatch");
    const auto dim = std::int64_t(1) << n;
    if (dim > dense::kDenseDimCap)
        throw std::invalid_argument("to_dense: dense dimension cap exceeded");
    dense::Mat m = dense::Mat::Zero(dim, dim);
    for (auto& [s, c] : op.terms()) {
        const cplx base = c * kPhases[__builtin_popcountll(s.x & s.z) % 4];
        for (std::int64_t t = 0; t < dim; ++t) {
            // X^x Z^z |t> = (-1)^{|z&t|} |t^x>
            const cplx amp = (__builtin_popcountll(s.z & std::uint64_t(t)) & 1)
                                 ? -base
                                 : base;
            m(t ^ std::int64_t(s.x), t) += amp;
        }
    }
    return m;
}

PauliOperator from_dense(const dense::Mat& m, int n_spins, double tol) {
    const auto dim = std::int64_t(1) << n_spins;
    if (m.rows() != dim || m.cols() != dim)
        throw std::invalid_argument("from_dense: dimension mismatch");
    if (n_spins > 8)
        throw std::invalid_argument("from_dense: n_spins <= 8 required");
    PauliOperator op(n_spins, tol);
    for (std::uint64_t x = 0; x < std::uint64_t(dim); ++x) {
        for (std::uint64_t z = 0; z < std::uint64_t(dim); ++z) {
            const PauliString s{x, z};
            const cplx base = kPhases[__builtin_popcountll(x & z) % 4];
            cplx tr{0, 0};
            // tr(P m) = sum_t P(t^x, t) <t| m |t^x>
            for (std::int64_t t = 0; t < dim; ++t) {
                const cplx amp =
                    (__builtin_popcountll(z & std::uint64_t(t)) & 1) ? -base : base;
                tr += amp * m(t, std::int64_t(t ^ x));
            }
            const cplx c = tr / double(dim);
            if (std::abs(c) > tol) op.add(s, c);
        }
    }
    return op;
}

std::string serialize(const PauliOperator& op) {
    std::ostringstream out;
    out << "# pauli n_spins=" << op.n_spins()
        << " drop_tolerance=" << op.drop_tolerance() << "\n";
    char buf[80];
    for (auto& [s, c] : op.sorted_terms()) {
        std::snprintf(buf, sizeof(buf), "%.17g%+.17gi", c.real(), c.imag());
        out << buf << ' ' << to_letters(s, op.n_spins()) << '\n';
    }
    return out.str();
}

PauliOperator deserialize(const std::string& text, double drop_tolerance) {
    std::istringstream in(text);
    std::string line;
    int n_spins = -1;
    PauliOperator op;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("n_spins=");
            if (pos != std::string::npos)
                n_spins = std::stoi(line.substr(pos + 8));
            continue;
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos)
            throw std::invalid_argument("deserialize: malformed line: " + line);
        const std::string cs = line.substr(0, sp);
        const std::string letters = line.substr(sp + 1);
        if (n_spins < 0) n_spins = int(letters.size());
        if (op.n_spins() == 0) op = PauliOperator(n_spins, drop_tolerance);
        // coefficient "re+imi": split at the sign that starts the imag part
        size_t split = cs.size();
        for (size_t i = 1; i < cs.size(); ++i) {
            if ((cs[i] == '+' || cs[i] == '-') && cs[i - 1] != 'e' &&
                cs[i - 1] != 'E')
                split = i;
        }
        if (split == cs.size() || cs.back() != 'i')
            throw std::invalid_argument("deserialize: bad coefficient: " + cs);
        const double re = std::stod(cs.substr(0, split));
        const double im = std::stod(cs.substr(split, cs.size() - split - 1));
        op.add(string_from_letters(letters), cplx{re, im});
    }
    if (op.n_spins() == 0) throw std::invalid_argument("deserialize: empty input");
    return op;
}

flow::FlowTrajectory<PauliOperator> truncated_flow(
    const flow::Harmonic<PauliOperator>& initial, const TruncationScheme& scheme,
    int norm_sites, const flow::StepperConfig& cfg) {
    Backend b(norm_sites, scheme);
    flow::FlowState<Backend> state;
    state.h = initial;
    return flow::integrate_flow(b, state, cfg);
}

CouplingTrace coupling_trace(const flow::FlowTrajectory<PauliOperator>& traj,
                             const std::vector<PauliOperator>& targets) {
    if (traj.snapshots.empty())
        throw std::invalid_argument("coupling_trace: no snapshots retained");
    CouplingTrace out;
    out.series.resize(targets.size());
    for (auto& snap : traj.snapshots) {
        out.lambdas.push_back(snap.lambda);
        for (size_t i = 0; i < targets.size(); ++i)
            out.series[i].push_back(inner_coefficient(snap.h.h[0], targets[i]));
    }
    return out;
}

}  // namespace floqflow::pauli
