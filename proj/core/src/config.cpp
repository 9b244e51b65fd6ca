#include "floqflow/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "floqflow/dense.hpp"

namespace floqflow::config {

using nlohmann::json;

namespace {

const std::set<std::string> kModelNames = {
    "driven_ising", "exponential_ising", "heisenberg_jjprime", "driven_hubbard"};

const std::set<std::string> kParamNames = {"omega", "J",   "h_z", "h_x",  "A",
                                           "L_J",   "Jp",  "t_h", "U",    "L_hop"};

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: field '" + field + "': " + why);
}

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            fail(where.empty() ? it.key() : where + "." + it.key(),
                 "unknown field");
}

double num(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(field, "must be finite");
    return v;
}

}  // namespace

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::dense: return "dense";
        case BackendKind::pauli: return "pauli";
        case BackendKind::mpo: return "mpo";
    }
    return "?";
}

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::flow: return "flow";
        case ExperimentKind::scan_1d: return "scan_1d";
        case ExperimentKind::scan_2d: return "scan_2d";
        case ExperimentKind::distance_map: return "distance_map";
        case ExperimentKind::spreading: return "spreading";
        case ExperimentKind::observable_flow: return "observable_flow";
        case ExperimentKind::heating_rate: return "heating_rate";
        case ExperimentKind::truncation_compare: return "truncation_compare";
    }
    return "?";
}

bool is_valid_param(const std::string& name) {
    return name == "L" || kParamNames.count(name) > 0;
}

void set_param(ExperimentConfig& cfg, const std::string& name, double value) {
    if (name == "L") {
        cfg.L = int(std::lround(value));
        return;
    }
    auto& p = cfg.params;
    if (name == "omega") p.omega = value;
    else if (name == "J") p.J = value;
    else if (name == "h_z") p.h_z = value;
    else if (name == "h_x") p.h_x = value;
    else if (name == "A") p.A = value;
    else if (name == "L_J") p.L_J = value;
    else if (name == "Jp") p.Jp = value;
    else if (name == "t_h") p.t_h = value;
    else if (name == "U") p.U = value;
    else if (name == "L_hop") p.L_hop = value;
    else fail(name, "unknown model parameter");
}

std::string scheme_name(const pauli::TruncationScheme& s) {
    switch (s.kind) {
        case pauli::TruncationKind::none: return "none";
        case pauli::TruncationKind::range_r: return "range_" + std::to_string(s.value);
        case pauli::TruncationKind::n_body: return "n_body_" + std::to_string(s.value);
    }
    return "?";
}

pauli::TruncationScheme parse_scheme(const std::string& name) {
    pauli::TruncationScheme s;
    if (name == "none") return s;
    const auto parse_tail = [&](size_t prefix_len) {
        try {
            s.value = std::stoi(name.substr(prefix_len));
        } catch (const std::exception&) {
            fail("truncation", "malformed scheme name '" + name + "'");
        }
        s.validate();
    };
    if (name.rfind("range_", 0) == 0) {
        s.kind = pauli::TruncationKind::range_r;
        parse_tail(6);
    } else if (name.rfind("n_body_", 0) == 0) {
        s.kind = pauli::TruncationKind::n_body;
        parse_tail(7);
    } else {
        fail("truncation", "unknown scheme '" + name + "' (none|range_<r>|n_body_<n>)");
    }
    return s;
}

void ExperimentConfig::validate() const {
    if (!kModelNames.count(model)) fail("model", "unknown model '" + model + "'");
    params.validate();
    const bool dense_full = backend == BackendKind::dense && !use_momentum_sectors;
    HilbertSpace space(L, model == "driven_hubbard" ? 4 : 2, boundary,
                       dense_full ? dense::kDenseDimCap : (std::int64_t(1) << 16));
    (void)space;
    stepper.validate();
    compression.validate();
    truncation.validate();
    for (auto& s : schemes) s.validate();
    if (use_momentum_sectors) {
        if (backend != BackendKind::dense)
            fail("use_momentum_sectors", "requires the dense backend");
        if (boundary != Boundary::periodic)
            fail("use_momentum_sectors", "requires periodic boundaries");
    }
    if (backend == BackendKind::mpo) {
        if (boundary != Boundary::open)
            fail("backend", "mpo backend requires open boundaries");
        if (model == "heisenberg_jjprime")
            fail("backend", "no MPO template for heisenberg_jjprime");
    }
    const auto needs_axis1 = kind == ExperimentKind::scan_1d ||
                             kind == ExperimentKind::scan_2d;
    if (needs_axis1) {
        if (!axis1) fail("axis1", "required for scans");
        if (kind == ExperimentKind::scan_2d && !axis2)
            fail("axis2", "required for scan_2d");
    }
    for (const auto* ax : {axis1 ? &*axis1 : nullptr, axis2 ? &*axis2 : nullptr}) {
        if (!ax) continue;
        if (!is_valid_param(ax->param))
            fail("axis.param", "unknown parameter '" + ax->param + "'");
        if (ax->grid.empty()) fail("axis.grid", "grid must be non-empty");
        for (double v : ax->grid)
            if (!std::isfinite(v)) fail("axis.grid", "grid values must be finite");
    }
    // capability matrix
    switch (kind) {
        case ExperimentKind::distance_map:
        case ExperimentKind::heating_rate:
            if (backend != BackendKind::dense)
                fail("kind", to_string(kind) + " requires the dense backend");
            if (kind == ExperimentKind::heating_rate && use_momentum_sectors)
                fail("kind", "heating_rate needs the full dense representation");
            break;
        case ExperimentKind::spreading:
            if (backend != BackendKind::mpo)
                fail("kind", "spreading requires the mpo backend");
            break;
        case ExperimentKind::truncation_compare:
            if (backend != BackendKind::pauli)
                fail("kind", "truncation_compare requires the pauli backend");
            break;
        case ExperimentKind::observable_flow:
            if (backend == BackendKind::pauli)
                fail("kind", "observable_flow supports dense and mpo backends");
            if (use_momentum_sectors)
                fail("kind", "observable_flow probes break translation symmetry");
            break;
        default: break;
    }
    if (kind == ExperimentKind::distance_map && n_periods.empty())
        fail("n_periods", "required for distance_map");
    for (int n : n_periods)
        if (n < 1) fail("n_periods", "periods must be >= 1");
    if (m_max_sambe < 0) fail("m_max_sambe", "must be >= 0 (0 = auto)");
    if (m_obs < 1) fail("m_obs", "must be >= 1");
    if (probe_max_width < 3) fail("probe_max_width", "must be >= 3");
    if (heating_time_points < 8) fail("heating_time_points", "must be >= 8");
    if (heating_t_max_periods <= 0) fail("heating_t_max_periods", "must be > 0");
    if (out_dir.empty()) fail("out_dir", "must be non-empty");
}

namespace {

ScanAxis parse_axis(const json& j, const std::string& field) {
    check_keys(j, field, {"param", "grid"});
    ScanAxis ax;
    if (!j.contains("param") || !j["param"].is_string())
        fail(field + ".param", "expected a string");
    ax.param = j["param"].get<std::string>();
    if (!j.contains("grid") || !j["grid"].is_array())
        fail(field + ".grid", "expected an array");
    for (auto& v : j["grid"]) ax.grid.push_back(num(v, field + ".grid"));
    return ax;
}

}  // namespace

ExperimentConfig parse_json_text(const std::string& text) {
    // normalize: strip '//' comment lines (commented variant of the format)
    std::istringstream in(text);
    std::ostringstream clean;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t");
        if (pos != std::string::npos && line.compare(pos, 2, "//") == 0) continue;
        clean << line << '\n';
    }
    json j;
    try {
        j = json::parse(clean.str());
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") +
                                    e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    check_keys(j, "", {"model", "params", "L", "boundary", "backend",
                       "use_momentum_sectors", "pauli_drop_tolerance",
                       "truncation", "schemes", "compression", "stepper", "kind",
                       "axis1", "axis2", "n_periods", "m_max_sambe", "m_obs",
                       "probe_max_width", "heating_time_points",
                       "heating_t_max_periods", "convergence_check", "out_dir",
                       "seed", "allow_gate_failure"});
    ExperimentConfig cfg;
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();
    if (j.contains("params")) {
        check_keys(j["params"], "params", kParamNames);
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            set_param(cfg, it.key(), num(it.value(), "params." + it.key()));
    }
    if (j.contains("L")) cfg.L = j["L"].get<int>();
    if (j.contains("boundary")) {
        const auto b = j["boundary"].get<std::string>();
        if (b == "open") cfg.boundary = Boundary::open;
        else if (b == "periodic") cfg.boundary = Boundary::periodic;
        else fail("boundary", "expected 'open' or 'periodic'");
    }
    if (j.contains("backend")) {
        const auto b = j["backend"].get<std::string>();
        if (b == "dense") cfg.backend = BackendKind::dense;
        else if (b == "pauli") cfg.backend = BackendKind::pauli;
        else if (b == "mpo") cfg.backend = BackendKind::mpo;
        else fail("backend", "expected dense|pauli|mpo");
    }
    if (j.contains("use_momentum_sectors"))
        cfg.use_momentum_sectors = j["use_momentum_sectors"].get<bool>();
    if (j.contains("pauli_drop_tolerance"))
        cfg.pauli_drop_tolerance = num(j["pauli_drop_tolerance"], "pauli_drop_tolerance");
    if (j.contains("truncation"))
        cfg.truncation = parse_scheme(j["truncation"].get<std::string>());
    if (j.contains("schemes"))
        for (auto& s : j["schemes"])
            cfg.schemes.push_back(parse_scheme(s.get<std::string>()));
    if (j.contains("compression")) {
        check_keys(j["compression"], "compression",
                   {"svd_cutoff", "max_bond", "product_bond_cap"});
        const auto& c = j["compression"];
        if (c.contains("svd_cutoff"))
            cfg.compression.svd_cutoff = num(c["svd_cutoff"], "compression.svd_cutoff");
        if (c.contains("max_bond")) cfg.compression.max_bond = c["max_bond"].get<int>();
        if (c.contains("product_bond_cap"))
            cfg.compression.product_bond_cap = c["product_bond_cap"].get<int>();
    }
    if (j.contains("stepper")) {
        check_keys(j["stepper"], "stepper",
                   {"scheme", "dl", "tol_rel", "tol_abs", "dl_min", "dl_max",
                    "lambda_max", "sample_stride", "norm_floor",
                    "divergence_ceiling", "store_snapshots", "snapshot_factor",
                    "snapshot_first"});
        const auto& s = j["stepper"];
        if (s.contains("scheme")) {
            const auto v = s["scheme"].get<std::string>();
            if (v == "rk4_fixed") cfg.stepper.scheme = flow::Scheme::rk4_fixed;
            else if (v == "rk45_adaptive") cfg.stepper.scheme = flow::Scheme::rk45_adaptive;
            else fail("stepper.scheme", "expected rk4_fixed|rk45_adaptive");
        }
        if (s.contains("dl")) cfg.stepper.dl = num(s["dl"], "stepper.dl");
        if (s.contains("tol_rel")) cfg.stepper.tol_rel = num(s["tol_rel"], "stepper.tol_rel");
        if (s.contains("tol_abs")) cfg.stepper.tol_abs = num(s["tol_abs"], "stepper.tol_abs");
        if (s.contains("dl_min")) cfg.stepper.dl_min = num(s["dl_min"], "stepper.dl_min");
        if (s.contains("dl_max")) cfg.stepper.dl_max = num(s["dl_max"], "stepper.dl_max");
        if (s.contains("lambda_max"))
            cfg.stepper.lambda_max = num(s["lambda_max"], "stepper.lambda_max");
        if (s.contains("sample_stride"))
            cfg.stepper.sample_stride = s["sample_stride"].get<int>();
        if (s.contains("norm_floor"))
            cfg.stepper.norm_floor = num(s["norm_floor"], "stepper.norm_floor");
        if (s.contains("divergence_ceiling"))
            cfg.stepper.divergence_ceiling =
                num(s["divergence_ceiling"], "stepper.divergence_ceiling");
        if (s.contains("store_snapshots"))
            cfg.stepper.store_snapshots = s["store_snapshots"].get<bool>();
        if (s.contains("snapshot_factor"))
            cfg.stepper.snapshot_factor = num(s["snapshot_factor"], "stepper.snapshot_factor");
        if (s.contains("snapshot_first"))
            cfg.stepper.snapshot_first = num(s["snapshot_first"], "stepper.snapshot_first");
    }
    if (j.contains("kind")) {
        const auto k = j["kind"].get<std::string>();
        bool found = false;
        for (auto kk : {ExperimentKind::flow, ExperimentKind::scan_1d,
                        ExperimentKind::scan_2d, ExperimentKind::distance_map,
                        ExperimentKind::spreading, ExperimentKind::observable_flow,
                        ExperimentKind::heating_rate,
                        ExperimentKind::truncation_compare})
            if (to_string(kk) == k) {
                cfg.kind = kk;
                found = true;
            }
        if (!found) fail("kind", "unknown experiment kind '" + k + "'");
    }
    if (j.contains("axis1")) cfg.axis1 = parse_axis(j["axis1"], "axis1");
    if (j.contains("axis2")) cfg.axis2 = parse_axis(j["axis2"], "axis2");
    if (j.contains("n_periods"))
        for (auto& v : j["n_periods"]) cfg.n_periods.push_back(v.get<int>());
    if (j.contains("m_max_sambe")) cfg.m_max_sambe = j["m_max_sambe"].get<int>();
    if (j.contains("m_obs")) cfg.m_obs = j["m_obs"].get<int>();
    if (j.contains("probe_max_width"))
        cfg.probe_max_width = j["probe_max_width"].get<int>();
    if (j.contains("heating_time_points"))
        cfg.heating_time_points = j["heating_time_points"].get<int>();
    if (j.contains("heating_t_max_periods"))
        cfg.heating_t_max_periods = num(j["heating_t_max_periods"], "heating_t_max_periods");
    if (j.contains("convergence_check"))
        cfg.convergence_check = j["convergence_check"].get<bool>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("allow_gate_failure"))
        cfg.allow_gate_failure = j["allow_gate_failure"].get<bool>();
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_json_text(buf.str());
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
    json j = json::parse(json_text);
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override '" + ov + "': expected key=value");
        std::string path = "/" + ov.substr(0, eq);
        for (auto& c : path)
            if (c == '.') c = '/';
        const std::string value = ov.substr(eq + 1);
        json v;
        try {
            v = json::parse(value);  // number/bool/array/quoted string
        } catch (const json::parse_error&) {
            v = value;  // bare string
        }
        j[json::json_pointer(path)] = v;
    }
    return j.dump();
}

std::string canonical_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = cfg.model;
    j["params"] = {{"omega", cfg.params.omega}, {"J", cfg.params.J},
                   {"h_z", cfg.params.h_z},     {"h_x", cfg.params.h_x},
                   {"A", cfg.params.A},         {"L_J", cfg.params.L_J},
                   {"Jp", cfg.params.Jp},       {"t_h", cfg.params.t_h},
                   {"U", cfg.params.U},         {"L_hop", cfg.params.L_hop}};
    j["L"] = cfg.L;
    j["boundary"] = cfg.boundary == Boundary::open ? "open" : "periodic";
    j["backend"] = to_string(cfg.backend);
    j["use_momentum_sectors"] = cfg.use_momentum_sectors;
    j["pauli_drop_tolerance"] = cfg.pauli_drop_tolerance;
    j["truncation"] = scheme_name(cfg.truncation);
    j["schemes"] = json::array();
    for (auto& s : cfg.schemes) j["schemes"].push_back(scheme_name(s));
    j["compression"] = {{"svd_cutoff", cfg.compression.svd_cutoff},
                        {"max_bond", cfg.compression.max_bond},
                        {"product_bond_cap", cfg.compression.product_bond_cap}};
    j["stepper"] = {
        {"scheme", cfg.stepper.scheme == flow::Scheme::rk4_fixed ? "rk4_fixed"
                                                                 : "rk45_adaptive"},
        {"dl", cfg.stepper.dl},
        {"tol_rel", cfg.stepper.tol_rel},
        {"tol_abs", cfg.stepper.tol_abs},
        {"dl_min", cfg.stepper.dl_min},
        {"dl_max", cfg.stepper.dl_max},
        {"lambda_max", cfg.stepper.lambda_max},
        {"sample_stride", cfg.stepper.sample_stride},
        {"norm_floor", cfg.stepper.norm_floor},
        {"divergence_ceiling", cfg.stepper.divergence_ceiling},
        {"store_snapshots", cfg.stepper.store_snapshots},
        {"snapshot_factor", cfg.stepper.snapshot_factor},
        {"snapshot_first", cfg.stepper.snapshot_first}};
    j["kind"] = to_string(cfg.kind);
    if (cfg.axis1) j["axis1"] = {{"param", cfg.axis1->param}, {"grid", cfg.axis1->grid}};
    if (cfg.axis2) j["axis2"] = {{"param", cfg.axis2->param}, {"grid", cfg.axis2->grid}};
    j["n_periods"] = cfg.n_periods;
    j["m_max_sambe"] = cfg.m_max_sambe;
    j["m_obs"] = cfg.m_obs;
    j["probe_max_width"] = cfg.probe_max_width;
    j["heating_time_points"] = cfg.heating_time_points;
    j["heating_t_max_periods"] = cfg.heating_t_max_periods;
    j["convergence_check"] = cfg.convergence_check;
    j["seed"] = cfg.seed;
    j["allow_gate_failure"] = cfg.allow_gate_failure;
    // out_dir is deliberately excluded: it does not change the computation
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = canonical_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

}  // namespace floqflow::config
