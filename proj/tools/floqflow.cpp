#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "floqflow/config.hpp"
#include "floqflow/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CLI::ValidationError("config", "cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int workers = 1;
};

void add_common(CLI::App* sub, CommonOpts& o, bool with_run_flags) {
    sub->add_option("config", o.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--override", o.overrides,
                    "dotted-path config override, key=value (repeatable)");
    if (with_run_flags) {
        sub->add_option("--out", o.out_dir, "output directory (overrides config)");
        sub->add_option("--workers", o.workers, "worker threads for grid points")
            ->check(CLI::PositiveNumber);
    }
}

floqflow::config::ExperimentConfig load(const CommonOpts& o) {
    std::string text = read_file(o.config_path);
    if (!o.overrides.empty())
        text = floqflow::config::apply_overrides(text, o.overrides);
    auto cfg = floqflow::config::parse_json_text(text);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    return cfg;
}

int execute(const CommonOpts& o) {
    const auto cfg = load(o);
    const auto manifest = floqflow::experiment::run(cfg, o.workers);
    for (const auto& g : manifest.gates)
        std::cout << "gate " << g.name << ": " << (g.passed ? "pass" : "FAIL")
                  << " (" << g.detail << ")\n";
    if (!manifest.error.empty()) std::cerr << "error: " << manifest.error << "\n";
    std::cout << "outputs in " << cfg.out_dir << " ("
              << manifest.outputs.size() << " files)\n";
    return floqflow::experiment::run_ok(cfg, manifest) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet flow renormalization engine"};
    app.require_subcommand(1);

    CommonOpts run_opts, val_opts, cmp_opts;
    auto* run_cmd = app.add_subcommand("run", "execute the configured experiment");
    add_common(run_cmd, run_opts, true);
    auto* val_cmd =
        app.add_subcommand("validate", "static config check, echo effective defaults");
    add_common(val_cmd, val_opts, false);
    auto* cmp_cmd = app.add_subcommand(
        "compare-truncation", "run the truncation-scheme comparison experiment");
    add_common(cmp_cmd, cmp_opts, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(val_cmd)) {
            std::string text = read_file(val_opts.config_path);
            if (!val_opts.overrides.empty())
                text = floqflow::config::apply_overrides(text, val_opts.overrides);
            bool ok = false;
            std::cout << floqflow::experiment::validate_report(text, &ok);
            return ok ? 0 : 1;
        }
        if (app.got_subcommand(cmp_cmd)) {
            auto cfg = load(cmp_opts);
            if (cfg.kind != floqflow::config::ExperimentKind::truncation_compare) {
                cfg.kind = floqflow::config::ExperimentKind::truncation_compare;
                cfg.validate();
            }
            const auto manifest = floqflow::experiment::run(cfg, cmp_opts.workers);
            for (const auto& g : manifest.gates)
                std::cout << "gate " << g.name << ": "
                          << (g.passed ? "pass" : "FAIL") << " (" << g.detail << ")\n";
            if (!manifest.error.empty())
                std::cerr << "error: " << manifest.error << "\n";
            return floqflow::experiment::run_ok(cfg, manifest) ? 0 : 1;
        }
        return execute(run_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
