#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <type_traits>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace floqflow::flow {

// Harmonic expansion H(t) = sum_m H_m e^{i m w t}, H_{-m} = H_m^dag stored
// implicitly. h[0] Hermitian.
template <class Op>
struct Harmonic {
    double omega = 1.0;
    std::vector<Op> h;  // index m = 0..m_max

    int m_max() const { return int(h.size()) - 1; }
};

enum class Scheme { rk4_fixed, rk45_adaptive };

struct StepperConfig {
    Scheme scheme = Scheme::rk45_adaptive;
    double dl = 1e-3;        // fixed step
    double tol_rel = 1e-8;   // adaptive
    double tol_abs = 1e-12;
    double dl_min = 1e-9;
    double dl_max = 0.05;
    double lambda_max = 10.0;
    int sample_stride = 1;
    // stop conditions
    double norm_floor = 0.0;             // on the total drive norm
    double divergence_ceiling = 10.0;    // multiple of the initial drive norm
    double resource_ceiling = std::numeric_limits<double>::infinity();
    // snapshot policy: keep backend states at ~log-spaced lambda
    bool store_snapshots = false;
    double snapshot_factor = 1.3;  // next snapshot at lambda * factor
    double snapshot_first = 1e-2;

    void validate() const {
        if (dl <= 0 || dl_min <= 0 || dl_max <= 0 || lambda_max <= 0)
            throw std::invalid_argument("StepperConfig: steps must be positive");
        if (tol_rel < 1e-12)
            throw std::invalid_argument("StepperConfig: tol_rel >= 1e-12 required");
    }
};

enum class Termination {
    lambda_max,
    norm_floor,
    divergence_ceiling,
    resource_ceiling,
    step_underflow,
    callback_stop,
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::lambda_max: return "lambda_max";
        case Termination::norm_floor: return "norm_floor";
        case Termination::divergence_ceiling: return "divergence_ceiling";
        case Termination::resource_ceiling: return "resource_ceiling";
        case Termination::step_underflow: return "step_underflow";
        case Termination::callback_stop: return "callback_stop";
    }
    return "?";
}

struct FlowSample {
    double lambda;
    std::vector<double> norms;       // ||H_m|| for m = 0..m_max
    std::vector<double> obs_norms;   // ||O_m|| when an observable co-flows
    double invariant_residual = 0.0; // filled by flow_invariant_residual
    double size_metric = 0.0;        // backend resource (bond dim, #strings)

    double drive_norm() const {
        double s = 0;
        for (size_t m = 1; m < norms.size(); ++m) s += norms[m] * norms[m];
        return std::sqrt(s);
    }
};

template <class Op>
struct Snapshot {
    double lambda;
    Harmonic<Op> h;
    std::vector<Op> obs;
};

template <class Op>
struct FlowTrajectory {
    std::vector<FlowSample> samples;
    std::vector<Snapshot<Op>> snapshots;
    Termination termination = Termination::lambda_max;

    std::vector<double> lambdas() const {
        std::vector<double> v;
        v.reserve(samples.size());
        for (auto& s : samples) v.push_back(s.lambda);
        return v;
    }
    std::vector<double> drive_norms() const {
        std::vector<double> v;
        v.reserve(samples.size());
        for (auto& s : samples) v.push_back(s.drive_norm());
        return v;
    }
};

// ---------------------------------------------------------------------------
// Flow state: harmonics plus (optionally) co-flowing observable harmonics.

template <class B>
struct FlowState {
    using Op = typename B::Op;
    Harmonic<Op> h;
    std::vector<Op> obs;  // observable harmonics m = 0..m_obs, may be empty

    int n_ops() const { return int(h.h.size() + obs.size()); }
};

namespace detail {

template <class B, class F>
void for_each_op(FlowState<B>& s, F&& f) {
    for (auto& op : s.h.h) f(op);
    for (auto& op : s.obs) f(op);
}

template <class B>
FlowState<B> clone_state(const B& b, const FlowState<B>& s) {
    FlowState<B> out;
    out.h.omega = s.h.omega;
    out.h.h.reserve(s.h.h.size());
    for (auto& op : s.h.h) out.h.h.push_back(b.clone(op));
    out.obs.reserve(s.obs.size());
    for (auto& op : s.obs) out.obs.push_back(b.clone(op));
    return out;
}

// y += a * x, elementwise over all operators in the state
template <class B>
void axpy_state(const B& b, FlowState<B>& y, std::complex<double> a,
                const FlowState<B>& x) {
    for (size_t i = 0; i < y.h.h.size(); ++i) b.axpy(y.h.h[i], a, x.h.h[i]);
    for (size_t i = 0; i < y.obs.size(); ++i) b.axpy(y.obs[i], a, x.obs[i]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Right-hand sides

// Generic flow of harmonic components:
//   dH_m = -m w H_m + sum_{m'=0}^{m-1} [H_{m-m'}, H_{m'}]
//                   + 2 sum_{m'=m+1}^{m_max} [H_{m'}, H_{m'-m}^dag]
// Harmonics above m_max stay identically zero.
template <class B>
Harmonic<typename B::Op> flow_rhs_generic(const B& b,
                                          const Harmonic<typename B::Op>& H) {
    const int mm = H.m_max();
    if (mm < 1) throw std::invalid_argument("flow_rhs_generic: m_max >= 1 required");
    Harmonic<typename B::Op> d;
    d.omega = H.omega;
    d.h.reserve(mm + 1);
    for (int m = 0; m <= mm; ++m) {
        auto dm = b.zero_like(H.h[m]);
        if (m > 0) b.axpy(dm, -double(m) * H.omega, H.h[m]);
        for (int mp = 0; mp < m; ++mp)
            b.axpy(dm, 1.0, b.commutator(H.h[m - mp], H.h[mp]));
        for (int mp = m + 1; mp <= mm; ++mp)
            b.axpy(dm, 2.0, b.commutator(H.h[mp], b.adjoint(H.h[mp - m])));
        d.h.push_back(std::move(dm));
    }
    return d;
}

// Specialized m_max = 1 form:
//   dH_0 = 2 [H_1, H_1^dag],  dH_1 = -w H_1 - [H_0, H_1]
template <class B>
Harmonic<typename B::Op> flow_rhs_harmonic(const B& b,
                                           const Harmonic<typename B::Op>& H) {
    if (H.m_max() != 1)
        throw std::invalid_argument("flow_rhs_harmonic: m_max == 1 required");
    Harmonic<typename B::Op> d;
    d.omega = H.omega;
    auto d0 = b.commutator(H.h[1], b.adjoint(H.h[1]));
    b.scale(d0, 2.0);
    auto d1 = b.commutator(H.h[1], H.h[0]);  // = -[H_0, H_1]
    b.axpy(d1, -H.omega, H.h[1]);
    d.h.push_back(std::move(d0));
    d.h.push_back(std::move(d1));
    return d;
}

// Full state RHS, including observable harmonics
//   dO_m = [H_1, O_{m-1}] - [H_1^dag, O_{m+1}],  O_{-1} = O_1^dag.
template <class B>
FlowState<B> flow_rhs_state(const B& b, const FlowState<B>& s) {
    FlowState<B> d;
    d.h = (s.h.m_max() == 1) ? flow_rhs_harmonic(b, s.h) : flow_rhs_generic(b, s.h);
    if (!s.obs.empty()) {
        if (s.h.m_max() != 1)
            throw std::invalid_argument("observable flow: m_max == 1 required");
        const auto& h1 = s.h.h[1];
        auto h1d = b.adjoint(h1);
        const int mo = int(s.obs.size()) - 1;
        for (int m = 0; m <= mo; ++m) {
            auto dm = b.zero_like(s.obs[m]);
            if (m == 0) {
                // [H_1, O_1^dag] - [H_1^dag, O_1], Hermitian for Hermitian O_0
                if (mo >= 1) {
                    b.axpy(dm, 1.0, b.commutator(h1, b.adjoint(s.obs[1])));
                    b.axpy(dm, -1.0, b.commutator(h1d, s.obs[1]));
                }
            } else {
                b.axpy(dm, 1.0, b.commutator(h1, s.obs[m - 1]));
                if (m + 1 <= mo) b.axpy(dm, -1.0, b.commutator(h1d, s.obs[m + 1]));
            }
            d.obs.push_back(std::move(dm));
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Integration

template <class B>
FlowSample make_sample(const B& b, double lambda, const FlowState<B>& s) {
    FlowSample out;
    out.lambda = lambda;
    double sz = 0;
    for (auto& op : s.h.h) {
        out.norms.push_back(b.norm(op));
        sz = std::max(sz, b.size_metric(op));
    }
    for (auto& op : s.obs) {
        out.obs_norms.push_back(b.norm(op));
        sz = std::max(sz, b.size_metric(op));
    }
    out.size_metric = sz;
    return out;
}

namespace detail {

// One classical RK4 step with per-stage compression; overwrites y.
template <class B>
void rk4_step(const B& b, FlowState<B>& y, double dl) {
    auto acc = clone_state(b, y);
    auto k = flow_rhs_state(b, y);  // k1
    axpy_state(b, acc, dl / 6.0, k);
    auto ytmp = clone_state(b, y);
    axpy_state(b, ytmp, dl / 2.0, k);
    for_each_op<B>(ytmp, [&](auto& op) { b.compress(op); });
    k = flow_rhs_state(b, ytmp);  // k2
    axpy_state(b, acc, dl / 3.0, k);
    ytmp = clone_state(b, y);
    axpy_state(b, ytmp, dl / 2.0, k);
    for_each_op<B>(ytmp, [&](auto& op) { b.compress(op); });
    k = flow_rhs_state(b, ytmp);  // k3
    axpy_state(b, acc, dl / 3.0, k);
    ytmp = clone_state(b, y);
    axpy_state(b, ytmp, dl, k);
    for_each_op<B>(ytmp, [&](auto& op) { b.compress(op); });
    k = flow_rhs_state(b, ytmp);  // k4
    axpy_state(b, acc, dl / 6.0, k);
    y = std::move(acc);
    for_each_op<B>(y, [&](auto& op) { b.compress(op); });
    b.symmetrize(y.h.h[0]);
}

// Cash-Karp 4(5) embedded pair. Returns scaled error estimate.
template <class B>
double rk45_step(const B& b, const FlowState<B>& y, double dl, FlowState<B>& y5,
                 double norm_scale) {
    static const double a[6][5] = {
        {0, 0, 0, 0, 0},
        {1. / 5, 0, 0, 0, 0},
        {3. / 40, 9. / 40, 0, 0, 0},
        {3. / 10, -9. / 10, 6. / 5, 0, 0},
        {-11. / 54, 5. / 2, -70. / 27, 35. / 27, 0},
        {1631. / 55296, 175. / 512, 575. / 13824, 44275. / 110592, 253. / 4096}};
    static const double b5[6] = {37. / 378,  0, 250. / 621,
                                 125. / 594, 0, 512. / 1771};
    static const double b4[6] = {2825. / 27648,  0,           18575. / 48384,
                                 13525. / 55296, 277. / 14336, 1. / 4};

    std::vector<FlowState<B>> k;
    k.reserve(6);
    for (int i = 0; i < 6; ++i) {
        auto yi = clone_state(b, y);
        for (int j = 0; j < i; ++j)
            if (a[i][j] != 0) axpy_state(b, yi, dl * a[i][j], k[j]);
        k.push_back(flow_rhs_state(b, yi));
    }
    y5 = clone_state(b, y);
    auto err = clone_state(b, y);
    for_each_op<B>(err, [&](auto& op) { b.scale(op, 0.0); });
    for (int i = 0; i < 6; ++i) {
        if (b5[i] != 0) axpy_state(b, y5, dl * b5[i], k[i]);
        if (b5[i] - b4[i] != 0) axpy_state(b, err, dl * (b5[i] - b4[i]), k[i]);
    }
    b.symmetrize(y5.h.h[0]);
    double e2 = 0;
    for_each_op<B>(err, [&](auto& op) {
        double n = b.norm(op);
        e2 += n * n;
    });
    return std::sqrt(e2) / norm_scale;
}

}  // namespace detail

// Integrates the flow equations from an initial state. Samples norms per
// cfg.sample_stride steps; snapshots are kept at roughly geometrically
// spaced lambda when enabled. A post_step hook returning true stops the
// integration early (Termination::callback_stop).
template <class B>
FlowTrajectory<typename B::Op> integrate_flow(
    const B& b, FlowState<B> state, const StepperConfig& cfg,
    const std::type_identity_t<std::function<bool(double, FlowState<B>&)>>&
        post_step = {}) {
    cfg.validate();
    FlowTrajectory<typename B::Op> traj;
    double lambda = 0.0;
    double dl = (cfg.scheme == Scheme::rk4_fixed) ? cfg.dl
                                                  : std::min(cfg.dl, cfg.dl_max);

    auto record = [&](double l, const FlowState<B>& s) {
        traj.samples.push_back(make_sample(b, l, s));
    };
    double next_snapshot = cfg.snapshot_first;
    auto maybe_snapshot = [&](double l, const FlowState<B>& s, bool force = false) {
        if (!cfg.store_snapshots) return;
        if (force || l >= next_snapshot || l == 0.0) {
            traj.snapshots.push_back({l, detail::clone_state(b, s).h,
                                      detail::clone_state(b, s).obs});
            while (next_snapshot <= l) next_snapshot *= cfg.snapshot_factor;
        }
    };

    record(0.0, state);
    maybe_snapshot(0.0, state, true);
    const double drive0 = traj.samples.front().drive_norm();

    long step_count = 0;
    while (cfg.lambda_max - lambda > 1e-12 * cfg.lambda_max) {
        // merge the remainder into the final step: a degenerate trailing
        // interval would poison finite differences on the sample grid
        if (cfg.lambda_max - lambda <= 1.5 * dl) dl = cfg.lambda_max - lambda;
        if (cfg.scheme == Scheme::rk4_fixed) {
            detail::rk4_step(b, state, dl);
            lambda += dl;
        } else {
            double norm_scale = 0;
            for (auto& op : state.h.h) {
                double n = b.norm(op);
                norm_scale += n * n;
            }
            norm_scale = std::sqrt(norm_scale) + cfg.tol_abs / cfg.tol_rel;
            while (true) {
                FlowState<B> y5;
                double err = detail::rk45_step(b, state, dl, y5, norm_scale);
                double tol = cfg.tol_rel;
                if (err <= tol) {
                    state = std::move(y5);
                    lambda += dl;
                    double grow = (err > 0) ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
                    dl = std::min(cfg.dl_max, dl * std::min(2.0, grow));
                    break;
                }
                dl *= std::max(0.2, 0.9 * std::pow(tol / err, 0.25));
                if (dl < cfg.dl_min) {
                    traj.termination = Termination::step_underflow;
                    record(lambda, state);
                    maybe_snapshot(lambda, state, true);
                    return traj;
                }
            }
        }
        if (post_step && post_step(lambda, state)) {
            traj.termination = Termination::callback_stop;
            if (traj.samples.back().lambda != lambda) record(lambda, state);
            maybe_snapshot(lambda, state, true);
            return traj;
        }
        ++step_count;
        if (step_count % cfg.sample_stride == 0) {
            record(lambda, state);
            maybe_snapshot(lambda, state);
            const auto& s = traj.samples.back();
            if (s.drive_norm() <= cfg.norm_floor) {
                traj.termination = Termination::norm_floor;
                maybe_snapshot(lambda, state, true);
                return traj;
            }
            if (drive0 > 0 && s.drive_norm() > cfg.divergence_ceiling * drive0) {
                traj.termination = Termination::divergence_ceiling;
                maybe_snapshot(lambda, state, true);
                return traj;
            }
            if (s.size_metric > cfg.resource_ceiling) {
                traj.termination = Termination::resource_ceiling;
                maybe_snapshot(lambda, state, true);
                return traj;
            }
        }
    }
    if (traj.samples.back().lambda != lambda) record(lambda, state);
    maybe_snapshot(lambda, state, true);
    traj.termination = Termination::lambda_max;
    return traj;
}

// ---------------------------------------------------------------------------
// Trajectory analysis

// Residual of  1/2 d||H_0||^2 + sum_{m>=1} [ d||H_m||^2 + 2 m w ||H_m||^2 ],
// evaluated per sample with central differences on the (nonuniform) lambda
// grid. Zero for the exact flow.
template <class Op>
std::vector<double> flow_invariant_residual(FlowTrajectory<Op>& traj, double omega) {
    auto& s = traj.samples;
    if (s.size() < 3)
        throw std::invalid_argument("flow_invariant_residual: need >= 3 samples");
    const size_t n = s.size();
    const size_t nm = s.front().norms.size();
    std::vector<double> res(n, 0.0);
    auto g = [&](size_t i) {
        double v = 0.5 * s[i].norms[0] * s[i].norms[0];
        for (size_t m = 1; m < nm; ++m) v += s[i].norms[m] * s[i].norms[m];
        return v;
    };
    for (size_t i = 1; i + 1 < n; ++i) {
        double h1 = s[i].lambda - s[i - 1].lambda;
        double h2 = s[i + 1].lambda - s[i].lambda;
        // three-point derivative on a nonuniform grid
        double dg = (g(i + 1) * h1 * h1 - g(i - 1) * h2 * h2 +
                     g(i) * (h2 * h2 - h1 * h1)) /
                    (h1 * h2 * (h1 + h2));
        double diss = 0;
        for (size_t m = 1; m < nm; ++m)
            diss += 2.0 * double(m) * omega * s[i].norms[m] * s[i].norms[m];
        res[i] = std::abs(dg + diss);
        s[i].invariant_residual = res[i];
    }
    res[0] = res[1];
    res[n - 1] = res[n - 2];
    s[0].invariant_residual = res[0];
    s[n - 1].invariant_residual = res[n - 1];
    return res;
}

enum class FlowClass {
    interior_minimum,
    monotone_decay_to_fixed_point,
    no_minimum_before_divergence,
};

inline const char* to_string(FlowClass c) {
    switch (c) {
        case FlowClass::interior_minimum: return "interior_minimum";
        case FlowClass::monotone_decay_to_fixed_point:
            return "monotone_decay_to_fixed_point";
        case FlowClass::no_minimum_before_divergence:
            return "no_minimum_before_divergence";
    }
    return "?";
}

struct PrethermalReport {
    FlowClass classification = FlowClass::monotone_decay_to_fixed_point;
    double lambda_pre = 0.0;
    double min_norm = 0.0;
    double t_c = std::numeric_limits<double>::infinity();
};

// First interior local minimum of the drive norm, refined by a quadratic
// fit in log(lambda). Flows that never rise again classify as monotone
// decay; flows that only grow classify as divergence without minimum.
template <class Op>
PrethermalReport detect_prethermal_minimum(const FlowTrajectory<Op>& traj,
                                           double rise_factor = 1.02) {
    const auto d = traj.drive_norms();
    const auto l = traj.lambdas();
    PrethermalReport rep;
    if (d.size() < 3) {
        rep.classification = FlowClass::monotone_decay_to_fixed_point;
        return rep;
    }
    // running minimum, confirmed once the series rises above it again
    size_t imin = 0;
    for (size_t i = 1; i < d.size(); ++i) {
        if (d[i] < d[imin]) imin = i;
        if (imin > 0 && imin < i && d[i] > rise_factor * d[imin]) {
            rep.classification = FlowClass::interior_minimum;
            rep.lambda_pre = l[imin];
            rep.min_norm = d[imin];
            // quadratic refinement in log lambda
            if (imin + 1 < d.size() && l[imin - 1] > 0) {
                double x0 = std::log(l[imin - 1]), x1 = std::log(l[imin]),
                       x2 = std::log(l[imin + 1]);
                double y0 = d[imin - 1], y1 = d[imin], y2 = d[imin + 1];
                double m1 = 0.5 * (x0 + x1), m2 = 0.5 * (x1 + x2);
                double d1 = (y1 - y0) / (x1 - x0), d2 = (y2 - y1) / (x2 - x1);
                double curv = (d2 - d1) / (m2 - m1);
                if (curv > 0) {
                    double xs = (d2 * m1 - d1 * m2) / (d2 - d1);
                    if (xs >= x0 && xs <= x2) {
                        rep.lambda_pre = std::exp(xs);
                        double ymin = y1 - 0.5 * curv * (x1 - xs) * (x1 - xs);
                        if (ymin > 0 && ymin < y1) rep.min_norm = ymin;
                    }
                }
            }
            rep.t_c = 1.0 / rep.min_norm;
            return rep;
        }
    }
    if (imin == d.size() - 1 || d.back() <= rise_factor * d[imin]) {
        rep.classification = FlowClass::monotone_decay_to_fixed_point;
        rep.lambda_pre = l.back();
        rep.min_norm = d[imin];
    } else {
        rep.classification = FlowClass::no_minimum_before_divergence;
        rep.min_norm = d[imin];
        rep.lambda_pre = l[imin];
    }
    return rep;
}

// t_eff = 1 / || sum_{M>0} H_M ||; infinite at exact fixed points.
inline double effective_timescale(const FlowSample& s) {
    double n = s.drive_norm();
    return n > 0 ? 1.0 / n : std::numeric_limits<double>::infinity();
}

}  // namespace floqflow::flow
