#include "floqflow/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "floqflow/block.hpp"
#include "floqflow/csv.hpp"
#include "floqflow/dense.hpp"
#include "floqflow/flow.hpp"
#include "floqflow/models.hpp"
#include "floqflow/mpo.hpp"
#include "floqflow/pauli.hpp"
#include "floqflow/sambe.hpp"

namespace floqflow::experiment {

namespace fs = std::filesystem;
using nlohmann::json;
using config::BackendKind;
using config::ExperimentConfig;
using config::ExperimentKind;

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

HilbertSpace make_space(const ExperimentConfig& cfg) {
    const int d = cfg.model == "driven_hubbard" ? 4 : 2;
    const bool dense_full =
        cfg.backend == BackendKind::dense && !cfg.use_momentum_sectors;
    return HilbertSpace(cfg.L, d, cfg.boundary,
                        dense_full ? dense::kDenseDimCap : (std::int64_t(1) << 16));
}

// ---------------------------------------------------------------------------
// Initial harmonics per backend

flow::Harmonic<dense::Mat> dense_harmonics(const ExperimentConfig& cfg) {
    const auto space = make_space(cfg);
    const auto ht = models::build_model(cfg.model, space, cfg.params);
    flow::Harmonic<dense::Mat> h;
    h.omega = ht.omega;
    h.h.push_back(dense::from_terms(ht.h0));
    h.h.push_back(dense::from_terms(ht.h1));
    return h;
}

flow::Harmonic<block::BlockOp> block_harmonics(const ExperimentConfig& cfg,
                                               const block::MomentumBasis& basis) {
    const auto ht = models::build_model(cfg.model, basis.space, cfg.params);
    flow::Harmonic<block::BlockOp> h;
    h.omega = ht.omega;
    h.h.push_back(block::from_terms(basis, ht.h0));
    h.h.push_back(block::from_terms(basis, ht.h1));
    return h;
}

flow::Harmonic<pauli::PauliOperator> pauli_harmonics(const ExperimentConfig& cfg) {
    const auto space = make_space(cfg);
    const auto ht = models::build_model(cfg.model, space, cfg.params);
    flow::Harmonic<pauli::PauliOperator> h;
    h.omega = ht.omega;
    h.h.push_back(pauli::from_terms(ht.h0, cfg.pauli_drop_tolerance));
    h.h.push_back(pauli::from_terms(ht.h1, cfg.pauli_drop_tolerance));
    return h;
}

// Spin operators in the sigma_z = +1 first basis, S = sigma/2.
mpo::Mat spin_matrix(char a) {
    mpo::Mat m(2, 2);
    switch (a) {
        case 'x': m << 0, 0.5, 0.5, 0; break;
        case 'y': m << 0, cplx(0, -0.5), cplx(0, 0.5), 0; break;
        default: m << 0.5, 0, 0, -0.5; break;
    }
    return m;
}

flow::Harmonic<mpo::MPO> mpo_harmonics(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const int L = cfg.L;
    flow::Harmonic<mpo::MPO> h;
    h.omega = p.omega;
    const mpo::Mat sx = spin_matrix('x');
    const mpo::Mat sz = spin_matrix('z');
    if (cfg.model == "driven_ising") {
        h.h.push_back(mpo::ising_mpo(-p.J, p.h_x, p.h_z, L));
        h.h.push_back(mpo::local_sum_mpo(0.5 * p.A * sz, L));
    } else if (cfg.model == "exponential_ising") {
        const mpo::Mat right = p.cross_term ? spin_matrix('y') : sx;
        h.h.push_back(mpo::exponential_mpo(-p.J, p.L_J, Eigen::Vector4d(1, 0, 0, 0),
                                           sx, right, p.h_x * sx + p.h_z * sz, L));
        h.h.push_back(mpo::local_sum_mpo(0.5 * p.A * sz, L));
    } else if (cfg.model == "driven_hubbard") {
        h.h.push_back(mpo::exponential_hubbard_mpo(p.t_h, p.L_hop, p.U, L));
        mpo::Mat n_updn = mpo::Mat::Zero(4, 4);
        n_updn(3, 3) = 1.0;
        h.h.push_back(mpo::local_sum_mpo(0.5 * p.A * n_updn, L));
    } else {
        throw std::invalid_argument("experiment: no MPO template for " + cfg.model);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Generic flow execution

struct FlowRunResult {
    std::vector<flow::FlowSample> samples;
    flow::Termination termination = flow::Termination::lambda_max;
    flow::PrethermalReport report;
};

template <class Op>
FlowRunResult summarize(flow::FlowTrajectory<Op>& traj, double omega) {
    FlowRunResult r;
    if (traj.samples.size() >= 3) flow::flow_invariant_residual(traj, omega);
    r.samples = traj.samples;
    r.termination = traj.termination;
    r.report = flow::detect_prethermal_minimum(traj);
    return r;
}

template <class B>
FlowRunResult run_backend_flow(const B& b, flow::Harmonic<typename B::Op> h,
                               const flow::StepperConfig& sc) {
    const double omega = h.omega;
    flow::FlowState<B> st;
    st.h = std::move(h);
    auto traj = flow::integrate_flow(b, std::move(st), sc);
    return summarize(traj, omega);
}

FlowRunResult run_flow_for(const ExperimentConfig& cfg) {
    switch (cfg.backend) {
        case BackendKind::dense:
            if (cfg.use_momentum_sectors) {
                const auto basis = block::build_momentum_basis(make_space(cfg));
                block::Backend b(basis);
                return run_backend_flow(b, block_harmonics(cfg, *basis), cfg.stepper);
            } else {
                dense::Backend b(cfg.L);
                return run_backend_flow(b, dense_harmonics(cfg), cfg.stepper);
            }
        case BackendKind::pauli: {
            const int norm_sites = cfg.L;
            auto traj = pauli::truncated_flow(pauli_harmonics(cfg), cfg.truncation,
                                              norm_sites, cfg.stepper);
            return summarize(traj, cfg.params.omega);
        }
        case BackendKind::mpo: {
            auto traj = mpo::mpo_flow(mpo_harmonics(cfg), cfg.compression, cfg.stepper);
            return summarize(traj, cfg.params.omega);
        }
    }
    throw std::logic_error("unreachable backend");
}

// ---------------------------------------------------------------------------
// Output helpers

struct Sink {
    fs::path out_dir;
    RunManifest* manifest;

    void emit(const std::string& name, const csv::Writer& w) {
        w.write((out_dir / name).string());
        manifest->outputs.push_back(name);
    }
    void emit_text(const std::string& name, const std::string& text) {
        std::ofstream f(out_dir / name);
        f << text;
        manifest->outputs.push_back(name);
    }
};

void add_common_metadata(csv::Writer& w, const ExperimentConfig& cfg) {
    w.add_metadata("config_hash", config::config_hash_hex(cfg));
    w.add_metadata("version", kArtifactVersion);
    w.add_metadata("model", cfg.model);
    w.add_metadata("backend", config::to_string(cfg.backend));
    w.add_metadata("units", "energies in units of the leading coupling, hbar = 1");
}

std::vector<std::string> sample_columns(const FlowRunResult& r) {
    std::vector<std::string> cols{"lambda"};
    const auto& s0 = r.samples.front();
    for (size_t m = 0; m < s0.norms.size(); ++m)
        cols.push_back("norm_h" + std::to_string(m));
    for (size_t m = 0; m < s0.obs_norms.size(); ++m)
        cols.push_back("norm_obs" + std::to_string(m));
    cols.push_back("invariant_residual");
    cols.push_back("size_metric");
    return cols;
}

void write_samples(csv::Writer& w, const FlowRunResult& r) {
    for (const auto& s : r.samples) {
        std::vector<double> row{s.lambda};
        row.insert(row.end(), s.norms.begin(), s.norms.end());
        row.insert(row.end(), s.obs_norms.begin(), s.obs_norms.end());
        row.push_back(s.invariant_residual);
        row.push_back(s.size_metric);
        w.add_row(row);
    }
}

json prethermal_json(const FlowRunResult& r) {
    json j;
    j["classification"] = flow::to_string(r.report.classification);
    j["lambda_pre"] = r.report.lambda_pre;
    j["min_norm"] = r.report.min_norm;
    j["t_c"] = std::isfinite(r.report.t_c) ? json(r.report.t_c) : json("inf");
    j["termination"] = flow::to_string(r.termination);
    return j;
}

void gate_termination(RunManifest& m, const ExperimentConfig& cfg,
                      flow::Termination t, const std::string& label) {
    GateResult g;
    g.name = label.empty() ? "no_step_underflow" : "no_step_underflow[" + label + "]";
    g.passed = t != flow::Termination::step_underflow;
    g.detail = flow::to_string(t);
    (void)cfg;
    m.gates.push_back(g);
}

// Step-halving / tolerance-tightening convergence gate on min ||H_1||.
void gate_convergence(RunManifest& m, const ExperimentConfig& cfg,
                      const FlowRunResult& base) {
    if (!cfg.convergence_check) return;
    ExperimentConfig tight = cfg;
    if (tight.stepper.scheme == flow::Scheme::rk4_fixed)
        tight.stepper.dl *= 0.5;
    else
        tight.stepper.tol_rel = std::max(1e-12, tight.stepper.tol_rel * 0.1);
    tight.convergence_check = false;
    const auto re = run_flow_for(tight);
    GateResult g;
    g.name = "step_convergence";
    const double a = base.report.min_norm, b = re.report.min_norm;
    const double dev = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    g.passed = dev < 0.01;
    std::ostringstream os;
    os << "min_norm deviation " << dev << " under step refinement";
    g.detail = os.str();
    m.gates.push_back(g);
}

// ---------------------------------------------------------------------------
// Worker pool and grid checkpoints

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::optional<std::vector<double>> load_checkpoint(const fs::path& dir,
                                                   const std::string& key) {
    std::ifstream f(dir / (key + ".json"));
    if (!f) return std::nullopt;
    try {
        json j = json::parse(f);
        return j.at("values").get<std::vector<double>>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void store_checkpoint(const fs::path& dir, const std::string& key,
                      const std::vector<double>& values) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return;  // checkpointing is best-effort
    const fs::path tmp = dir / (key + ".tmp");
    const fs::path dst = dir / (key + ".json");
    {
        std::ofstream f(tmp);
        f << json{{"values", values}}.dump();
    }
    fs::rename(tmp, dst, ec);
}

// ---------------------------------------------------------------------------
// Experiment kinds

void run_single_flow(const ExperimentConfig& cfg, Sink& sink, RunManifest& m) {
    auto res = run_flow_for(cfg);
    csv::Writer w(sample_columns(res));
    add_common_metadata(w, cfg);
    w.add_metadata("termination", flow::to_string(res.termination));
    write_samples(w, res);
    sink.emit("flow.csv", w);
    sink.emit_text("prethermal.json", prethermal_json(res).dump(2) + "\n");
    gate_termination(m, cfg, res.termination, "");
    gate_convergence(m, cfg, res);
}

void run_observable_flow(const ExperimentConfig& cfg, Sink& sink, RunManifest& m) {
    FlowRunResult res;
    if (cfg.backend == BackendKind::dense) {
        const auto space = make_space(cfg);
        dense::Backend b(cfg.L);
        flow::FlowState<dense::Backend> st;
        st.h = dense_harmonics(cfg);
        const int center = space.num_spins() / 2;
        st.obs.push_back(0.5 * dense::site_operator(space.num_spins(), center, P::Z));
        for (int mm = 1; mm <= cfg.m_obs; ++mm)
            st.obs.push_back(dense::Mat::Zero(st.obs[0].rows(), st.obs[0].cols()));
        auto traj = flow::integrate_flow(b, std::move(st), cfg.stepper);
        res = summarize(traj, cfg.params.omega);
    } else {
        const auto h = mpo_harmonics(cfg);
        const int d = h.h[0].d;
        mpo::Mat obs_op = d == 2 ? mpo::Mat(spin_matrix('z'))
                                 : mpo::Mat(mpo::Mat::Zero(4, 4));
        if (d == 4) obs_op(3, 3) = 1.0;  // double occupancy
        const auto probe = mpo::local_site_mpo(obs_op, cfg.L / 2, cfg.L, d);
        auto traj = mpo::mpo_observable_flow(h, probe, cfg.m_obs, cfg.compression,
                                             cfg.stepper);
        res = summarize(traj, cfg.params.omega);
    }
    csv::Writer w(sample_columns(res));
    add_common_metadata(w, cfg);
    w.add_metadata("termination", flow::to_string(res.termination));
    w.add_metadata("observable", "S^z at the central site (double occupancy for Hubbard)");
    write_samples(w, res);
    sink.emit("observable_flow.csv", w);
    sink.emit_text("prethermal.json", prethermal_json(res).dump(2) + "\n");
    gate_termination(m, cfg, res.termination, "");
}

struct GridPoint {
    std::vector<double> values;  // axis values
    int index = 0;
};

void run_scan(const ExperimentConfig& cfg, Sink& sink, RunManifest& m, int workers) {
    const bool two_d = cfg.kind == ExperimentKind::scan_2d;
    std::vector<GridPoint> points;
    if (two_d) {
        int idx = 0;
        for (double v1 : cfg.axis1->grid)
            for (double v2 : cfg.axis2->grid) points.push_back({{v1, v2}, idx++});
    } else {
        int idx = 0;
        for (double v : cfg.axis1->grid) points.push_back({{v}, idx++});
    }

    const fs::path cache = cache_directory(cfg);
    const std::string hash = config::config_hash_hex(cfg);
    const size_t n_axis = two_d ? 2 : 1;
    std::vector<std::vector<double>> rows(points.size());
    std::atomic<int> n_underflow{0};

    parallel_for(int(points.size()), workers, [&](int i) {
        const auto& pt = points[size_t(i)];
        const std::string key = hash + "-" + config::to_string(cfg.kind) + "-" +
                                std::to_string(pt.index);
        if (auto cached = load_checkpoint(cache, key);
            cached && cached->size() == n_axis + 5) {
            rows[size_t(i)] = *cached;
            if ((*cached)[n_axis + 4] ==
                double(int(flow::Termination::step_underflow)))
                ++n_underflow;
            return;
        }
        ExperimentConfig point_cfg = cfg;
        config::set_param(point_cfg, cfg.axis1->param, pt.values[0]);
        if (two_d) config::set_param(point_cfg, cfg.axis2->param, pt.values[1]);
        const auto res = run_flow_for(point_cfg);
        std::vector<double> row = pt.values;
        row.push_back(res.report.lambda_pre);
        row.push_back(res.report.min_norm);
        row.push_back(res.report.t_c);
        row.push_back(double(int(res.report.classification)));
        row.push_back(double(int(res.termination)));
        if (res.termination == flow::Termination::step_underflow) ++n_underflow;
        rows[size_t(i)] = row;
        store_checkpoint(cache, key, row);
    });

    std::vector<std::string> cols;
    cols.push_back(cfg.axis1->param);
    if (two_d) cols.push_back(cfg.axis2->param);
    for (const char* c : {"lambda_pre", "min_norm", "t_c", "classification",
                          "termination"})
        cols.push_back(c);
    csv::Writer w(cols);
    add_common_metadata(w, cfg);
    w.add_metadata("classification_codes",
                   "0=interior_minimum 1=monotone_decay 2=no_minimum_before_divergence");
    w.add_metadata("termination_codes",
                   "0=lambda_max 1=norm_floor 2=divergence_ceiling "
                   "3=resource_ceiling 4=step_underflow");
    for (const auto& r : rows) w.add_row(r);
    sink.emit(two_d ? "scan2d.csv" : "scan.csv", w);

    GateResult g;
    g.name = "no_step_underflow";
    g.passed = n_underflow.load() == 0;
    g.detail = std::to_string(n_underflow.load()) + " of " +
               std::to_string(points.size()) + " grid points hit step underflow";
    m.gates.push_back(g);
}

int sambe_blocks_for(const ExperimentConfig& cfg, double omega, double h0n,
                     double h1n) {
    if (cfg.m_max_sambe > 0) return cfg.m_max_sambe;
    const double nrm = std::sqrt(h0n * h0n + 2.0 * h1n * h1n);
    return std::max(2, int(std::ceil(4.0 * nrm / omega)) + 2);
}

double block_bound_norm(const block::MomentumBasis& basis, const block::BlockOp& a) {
    double num = 0, den = 0;
    for (size_t k = 0; k < basis.sectors.size(); ++k) {
        const double w = basis.sectors[k].weight;
        num += w * a.blocks[k].squaredNorm();
        den += w * double(a.blocks[k].rows());
    }
    return std::sqrt(num / den);
}

void run_distance_map(const ExperimentConfig& cfg, Sink& sink, RunManifest& m,
                      int workers) {
    const double omega = cfg.params.omega;
    const double T = 2.0 * M_PI / omega;
    std::vector<double> times;
    for (int n : cfg.n_periods) times.push_back(n * T);

    flow::StepperConfig sc = cfg.stepper;
    sc.store_snapshots = true;

    // rows: lambda, n, t, d, bound
    std::vector<std::vector<std::vector<double>>> by_snapshot;
    flow::Termination term;

    if (cfg.use_momentum_sectors) {
        const auto basis = block::build_momentum_basis(make_space(cfg));
        block::Backend b(basis);
        flow::FlowState<block::Backend> st;
        st.h = block_harmonics(cfg, *basis);
        auto traj = flow::integrate_flow(b, std::move(st), sc);
        term = traj.termination;
        by_snapshot.resize(traj.snapshots.size());
        parallel_for(int(traj.snapshots.size()), workers, [&](int i) {
            const auto& snap = traj.snapshots[size_t(i)];
            const double h0n = b.norm(snap.h.h[0]);
            const double h1n = b.norm(snap.h.h[1]);
            const int mm = sambe_blocks_for(cfg, omega, h0n, h1n);
            const auto d = sambe::distance_metric_block(*basis, snap.h.h[0],
                                                        snap.h.h[1], omega, mm, times);
            const double bnorm = block_bound_norm(*basis, snap.h.h[1]);
            auto& rows = by_snapshot[size_t(i)];
            for (size_t j = 0; j < times.size(); ++j)
                rows.push_back({snap.lambda, double(cfg.n_periods[j]), times[j],
                                d[j], 2.0 * cfg.n_periods[j] * T * bnorm});
        });
    } else {
        dense::Backend b(cfg.L);
        flow::FlowState<dense::Backend> st;
        st.h = dense_harmonics(cfg);
        auto traj = flow::integrate_flow(b, std::move(st), sc);
        term = traj.termination;
        by_snapshot.resize(traj.snapshots.size());
        parallel_for(int(traj.snapshots.size()), workers, [&](int i) {
            const auto& snap = traj.snapshots[size_t(i)];
            const double h0n = b.norm(snap.h.h[0]);
            const double h1n = b.norm(snap.h.h[1]);
            const int mm = sambe_blocks_for(cfg, omega, h0n, h1n);
            const auto d = sambe::distance_metric(snap.h, mm, times);
            const double bnorm = sambe::bound_norm(snap.h.h[1]);
            auto& rows = by_snapshot[size_t(i)];
            for (size_t j = 0; j < times.size(); ++j)
                rows.push_back({snap.lambda, double(cfg.n_periods[j]), times[j],
                                d[j], 2.0 * cfg.n_periods[j] * T * bnorm});
        });
    }

    csv::Writer w({"lambda", "n", "t", "distance", "bound"});
    add_common_metadata(w, cfg);
    w.add_metadata("termination", flow::to_string(term));
    w.add_metadata("bound", "2 n T ||H_1||, trace normalization tr/tr(1)");
    for (const auto& rows : by_snapshot)
        for (const auto& r : rows) w.add_row(r);
    sink.emit("distance.csv", w);
    gate_termination(m, cfg, term, "");
}

void run_spreading(const ExperimentConfig& cfg, Sink& sink, RunManifest& m) {
    flow::StepperConfig sc = cfg.stepper;
    sc.store_snapshots = true;
    auto traj = mpo::mpo_flow(mpo_harmonics(cfg), cfg.compression, sc);

    const int max_w = std::min(cfg.probe_max_width, cfg.L - 2);
    csv::Writer ws([&] {
        std::vector<std::string> cols{"lambda"};
        for (int n = 2; n <= max_w; ++n) cols.push_back("c_" + std::to_string(n));
        return cols;
    }());
    add_common_metadata(ws, cfg);
    ws.add_metadata("termination", flow::to_string(traj.termination));
    ws.add_metadata("probe", "S^x P_up...P_up S^x, width n, centered");
    for (const auto& snap : traj.snapshots) {
        const auto c = mpo::probe_coefficients(snap.h.h[0], max_w);
        std::vector<double> row{snap.lambda};
        row.insert(row.end(), c.begin(), c.end());
        ws.add_row(row);
    }
    sink.emit("spreading.csv", ws);

    const double coeff_floor = 100.0 * cfg.compression.svd_cutoff;
    const auto diag = mpo::spreading_profile(traj, max_w, coeff_floor);
    csv::Writer wl({"lambda", "zeta", "fit_r2"});
    add_common_metadata(wl, cfg);
    for (size_t i = 0; i < diag.lambdas.size(); ++i)
        wl.add_row({diag.lambdas[i], diag.zeta[i], diag.fit_r2[i]});
    sink.emit("locality.csv", wl);

    json j;
    j["lambda_c"] = diag.critical.lambda_c;
    j["lambda_c_err"] = diag.critical.lambda_c_err;
    j["r2"] = diag.critical.r2;
    j["ok"] = diag.critical.ok;
    j["termination"] = flow::to_string(traj.termination);
    sink.emit_text("locality.json", j.dump(2) + "\n");

    auto res = summarize(traj, cfg.params.omega);
    sink.emit_text("prethermal.json", prethermal_json(res).dump(2) + "\n");
    gate_termination(m, cfg, traj.termination, "");
}

void run_heating_rate(const ExperimentConfig& cfg, Sink& sink, RunManifest& m) {
    flow::StepperConfig sc = cfg.stepper;
    sc.store_snapshots = true;
    dense::Backend b(cfg.L);
    flow::FlowState<dense::Backend> st;
    st.h = dense_harmonics(cfg);
    auto traj = flow::integrate_flow(b, std::move(st), sc);
    auto res = summarize(traj, cfg.params.omega);
    if (traj.snapshots.empty())
        throw std::runtime_error("heating_rate: no snapshots retained");

    // snapshot nearest the prethermal minimum
    size_t best = 0;
    for (size_t i = 1; i < traj.snapshots.size(); ++i)
        if (std::abs(traj.snapshots[i].lambda - res.report.lambda_pre) <
            std::abs(traj.snapshots[best].lambda - res.report.lambda_pre))
            best = i;
    const auto& H = traj.snapshots[best].h;

    const auto eig = dense::hermitian_eig(H.h[0]);
    const dense::Vec psi = eig.evecs.col(0);

    const double T = 2.0 * M_PI / cfg.params.omega;
    std::vector<double> grid;
    for (int i = 0; i < cfg.heating_time_points; ++i)
        grid.push_back(cfg.heating_t_max_periods * T * double(i) /
                       double(cfg.heating_time_points - 1));
    const auto hr = sambe::heating_rate(H, psi, grid);

    const double h1n = b.norm(H.h[1]);
    csv::Writer w({"t", "rate_correlator", "rate_continuation"});
    add_common_metadata(w, cfg);
    w.add_metadata("lambda_snapshot", csv::format_double(traj.snapshots[best].lambda));
    w.add_metadata("h1_norm", csv::format_double(h1n));
    w.add_metadata("max_deviation", csv::format_double(hr.max_deviation));
    for (size_t i = 0; i < hr.times.size(); ++i)
        w.add_row({hr.times[i], hr.rate_correlator[i], hr.rate_continuation[i]});
    sink.emit("heating.csv", w);
    sink.emit_text("prethermal.json", prethermal_json(res).dump(2) + "\n");

    GateResult g;
    g.name = "heating_methods_consistent";
    const double bound = 10.0 * h1n * h1n * h1n;
    g.passed = hr.max_deviation <= bound;
    std::ostringstream os;
    os << "max deviation " << hr.max_deviation << " vs bound " << bound;
    g.detail = os.str();
    m.gates.push_back(g);
    gate_termination(m, cfg, res.termination, "");
}

void run_truncation_compare(const ExperimentConfig& cfg, Sink& sink, RunManifest& m,
                            int workers) {
    std::vector<pauli::TruncationScheme> schemes;
    schemes.push_back({});  // untruncated reference
    for (const auto& s : cfg.schemes)
        if (s.kind != pauli::TruncationKind::none) schemes.push_back(s);

    const auto initial = pauli_harmonics(cfg);
    flow::StepperConfig sc = cfg.stepper;
    sc.store_snapshots = true;

    // deterministic coupling-trace targets: dominant strings of H_0
    std::vector<pauli::PauliOperator> targets;
    std::vector<std::string> target_names;
    {
        auto sorted = initial.h[0].sorted_terms();
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const auto& a, const auto& b) {
                             return std::abs(a.second) > std::abs(b.second);
                         });
        for (size_t i = 0; i < sorted.size() && targets.size() < 6; ++i) {
            if (sorted[i].first.is_identity()) continue;
            pauli::PauliOperator t(initial.h[0].n_spins(), cfg.pauli_drop_tolerance);
            t.add(sorted[i].first, 1.0);
            targets.push_back(std::move(t));
            target_names.push_back(
                pauli::to_letters(sorted[i].first, initial.h[0].n_spins()));
        }
    }

    struct SchemeResult {
        FlowRunResult res;
        pauli::CouplingTrace trace;
        std::string error;
    };
    std::vector<SchemeResult> results(schemes.size());

    parallel_for(int(schemes.size()), workers, [&](int i) {
        try {
            auto traj = pauli::truncated_flow(initial, schemes[size_t(i)], cfg.L, sc);
            results[size_t(i)].trace = pauli::coupling_trace(traj, targets);
            results[size_t(i)].res = summarize(traj, cfg.params.omega);
        } catch (const std::exception& e) {
            results[size_t(i)].error = e.what();
        }
    });

    csv::Writer summary({"scheme_index", "lambda_pre", "min_norm", "t_c",
                         "classification", "termination"});
    add_common_metadata(summary, cfg);
    for (size_t i = 0; i < schemes.size(); ++i)
        summary.add_metadata("scheme_" + std::to_string(i),
                             config::scheme_name(schemes[i]));

    for (size_t i = 0; i < schemes.size(); ++i) {
        const std::string name = config::scheme_name(schemes[i]);
        auto& sr = results[i];
        GateResult g;
        g.name = "scheme_completed[" + name + "]";
        g.passed = sr.error.empty();
        g.detail = sr.error.empty() ? flow::to_string(sr.res.termination) : sr.error;
        m.gates.push_back(g);
        if (!sr.error.empty()) continue;

        csv::Writer w(sample_columns(sr.res));
        add_common_metadata(w, cfg);
        w.add_metadata("scheme", name);
        w.add_metadata("termination", flow::to_string(sr.res.termination));
        write_samples(w, sr.res);
        sink.emit("truncation_" + name + ".csv", w);

        if (!targets.empty()) {
            std::vector<std::string> cols{"lambda"};
            for (const auto& tn : target_names) cols.push_back("abs_c_" + tn);
            csv::Writer wc(cols);
            add_common_metadata(wc, cfg);
            wc.add_metadata("scheme", name);
            for (size_t s = 0; s < sr.trace.lambdas.size(); ++s) {
                std::vector<double> row{sr.trace.lambdas[s]};
                for (size_t t = 0; t < targets.size(); ++t)
                    row.push_back(std::abs(sr.trace.series[t][s]));
                wc.add_row(row);
            }
            sink.emit("couplings_" + name + ".csv", wc);
        }

        summary.add_row({double(i), sr.res.report.lambda_pre, sr.res.report.min_norm,
                         sr.res.report.t_c,
                         double(int(sr.res.report.classification)),
                         double(int(sr.res.termination))});
    }
    sink.emit("truncation_summary.csv", summary);
}

}  // namespace

// ---------------------------------------------------------------------------

bool RunManifest::gates_passed() const {
    for (const auto& g : gates)
        if (!g.passed) return false;
    return true;
}

std::string RunManifest::to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["gates"] = json::array();
    for (const auto& g : gates)
        j["gates"].push_back(
            {{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
    j["outputs"] = outputs;
    j["error"] = error;
    return j.dump(2) + "\n";
}

std::string cache_directory(const config::ExperimentConfig& cfg) {
    if (const char* env = std::getenv("FLOQFLOW_CACHE_DIR"); env && *env)
        return env;
    return (fs::path(cfg.out_dir) / "cache").string();
}

bool run_ok(const config::ExperimentConfig& cfg, const RunManifest& m) {
    if (!m.error.empty()) return false;
    return m.gates_passed() || cfg.allow_gate_failure;
}

RunManifest run(const config::ExperimentConfig& cfg, int workers) {
    cfg.validate();
    RunManifest manifest;
    manifest.config_hash = config::config_hash_hex(cfg);
    manifest.started_at = utc_now();

    fs::create_directories(cfg.out_dir);
    Sink sink{fs::path(cfg.out_dir), &manifest};
    sink.emit_text("effective_config.json", config::canonical_json(cfg) + "\n");

    try {
        switch (cfg.kind) {
            case ExperimentKind::flow:
                run_single_flow(cfg, sink, manifest);
                break;
            case ExperimentKind::observable_flow:
                run_observable_flow(cfg, sink, manifest);
                break;
            case ExperimentKind::scan_1d:
            case ExperimentKind::scan_2d:
                run_scan(cfg, sink, manifest, workers);
                break;
            case ExperimentKind::distance_map:
                run_distance_map(cfg, sink, manifest, workers);
                break;
            case ExperimentKind::spreading:
                run_spreading(cfg, sink, manifest);
                break;
            case ExperimentKind::heating_rate:
                run_heating_rate(cfg, sink, manifest);
                break;
            case ExperimentKind::truncation_compare:
                run_truncation_compare(cfg, sink, manifest, workers);
                break;
        }
    } catch (const std::exception& e) {
        manifest.error = e.what();
    }

    manifest.finished_at = utc_now();
    manifest.outputs.push_back("manifest.json");
    std::ofstream f(fs::path(cfg.out_dir) / "manifest.json");
    f << manifest.to_json();
    return manifest;
}

std::string validate_report(const std::string& json_text, bool* ok) {
    try {
        const auto cfg = config::parse_json_text(json_text);
        if (ok) *ok = true;
        return "ok\neffective configuration:\n" + config::canonical_json(cfg) + "\n";
    } catch (const std::exception& e) {
        if (ok) *ok = false;
        return std::string("error: ") + e.what() + "\n";
    }
}

}  // namespace floqflow::experiment
