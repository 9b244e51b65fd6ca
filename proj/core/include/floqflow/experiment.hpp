#pragma once

#include <string>
#include <vector>

#include "floqflow/config.hpp"

namespace floqflow::experiment {

inline constexpr const char* kArtifactVersion = "0.1.0";

// One convergence/consistency gate evaluated during a run.
struct GateResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct RunManifest {
    std::string config_hash;
    std::string version = kArtifactVersion;
    std::string started_at;   // ISO 8601 UTC
    std::string finished_at;
    std::vector<GateResult> gates;
    std::vector<std::string> outputs;  // paths relative to out_dir
    std::string error;                 // nonempty marks a mid-run failure

    bool gates_passed() const;
    std::string to_json() const;
};

// Executes the configured experiment, writing data files plus manifest.json
// into cfg.out_dir. Exceptions are captured into manifest.error with partial
// outputs preserved. Grid points dispatch to `workers` threads; results are
// collected in grid order, and each finished point is checkpointed in the
// cache directory so reruns of the same config resume.
RunManifest run(const config::ExperimentConfig& cfg, int workers = 1);

// Verdict used for the process exit status: no error, and either all gates
// passed or the config explicitly allows gate failure.
bool run_ok(const config::ExperimentConfig& cfg, const RunManifest& m);

// Static validation of config text (post-override): findings plus the
// effective config echo with defaults filled in. Never throws.
std::string validate_report(const std::string& json_text, bool* ok = nullptr);

// $FLOQFLOW_CACHE_DIR when set, otherwise <out_dir>/cache.
std::string cache_directory(const config::ExperimentConfig& cfg);

}  // namespace floqflow::experiment
