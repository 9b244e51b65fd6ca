#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floqflow/flow.hpp"
#include "floqflow/hilbert.hpp"
#include "floqflow/models.hpp"
#include "floqflow/mpo.hpp"
#include "floqflow/pauli.hpp"

namespace floqflow::config {

enum class BackendKind { dense, pauli, mpo };
enum class ExperimentKind {
    flow,
    scan_1d,
    scan_2d,
    distance_map,
    spreading,
    observable_flow,
    heating_rate,
    truncation_compare,
};

std::string to_string(BackendKind k);
std::string to_string(ExperimentKind k);

struct ScanAxis {
    std::string param;  // model parameter name or "L"
    std::vector<double> grid;
};

struct ExperimentConfig {
    // model
    std::string model = "driven_ising";
    models::ModelParams params;
    int L = 8;
    Boundary boundary = Boundary::periodic;

    // backend
    BackendKind backend = BackendKind::dense;
    bool use_momentum_sectors = false;  // dense backend on periodic chains
    double pauli_drop_tolerance = 1e-12;
    pauli::TruncationScheme truncation;           // single pauli runs
    std::vector<pauli::TruncationScheme> schemes; // truncation_compare list
    mpo::CompressionConfig compression;

    flow::StepperConfig stepper;

    // experiment
    ExperimentKind kind = ExperimentKind::flow;
    std::optional<ScanAxis> axis1;
    std::optional<ScanAxis> axis2;
    std::vector<int> n_periods;  // distance map period grid
    int m_max_sambe = 0;         // 0 = convergence rule
    int m_obs = 2;               // observable-flow harmonics
    int probe_max_width = 14;    // spreading probe widths 2..max
    int heating_time_points = 128;
    double heating_t_max_periods = 5.0;
    bool convergence_check = false;  // rerun at tightened tolerance, gate 1%

    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool allow_gate_failure = false;

    // Semantic validation: parameter existence, grids, capability matrix.
    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Model/scan parameter plumbing ("omega", "J", "h_x", ..., "L").
bool is_valid_param(const std::string& name);
void set_param(ExperimentConfig& cfg, const std::string& name, double value);

// Strict JSON ingestion: unknown keys are errors naming the field. Text may
// contain '//' comment lines (normalized away before parsing).
ExperimentConfig parse_json_text(const std::string& text);
ExperimentConfig parse_file(const std::string& path);

// "dotted.path=value" overrides applied to the JSON document before parsing.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

// Canonical (sorted-key) JSON of the effective config, including defaults.
std::string canonical_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical JSON.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

// Truncation scheme names: "none", "range_<r>", "n_body_<n>".
std::string scheme_name(const pauli::TruncationScheme& s);
pauli::TruncationScheme parse_scheme(const std::string& name);

}  // namespace floqflow::config
