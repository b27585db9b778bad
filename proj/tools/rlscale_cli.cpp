// rlscale command-line front end. Deliberately thin: flag parsing plus calls
// into the shared library's C API, so it doubles as a reference client.

#include <cinttypes>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rlscale.h"

namespace {

// CLI exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.
// Filesystem problems surface as data errors at the command level.
int exit_code(rls_status status) {
    switch (status) {
        case RLS_OK: return 0;
        case RLS_USAGE_ERROR: return 1;
        case RLS_NUMERIC_ERROR: return 3;
        case RLS_DATA_ERROR:
        case RLS_IO_ERROR:
        default: return 2;
    }
}

int finish(rls_status status, const char* what) {
    if (status != RLS_OK) {
        std::fprintf(stderr, "%s: %s\n", what, rls_last_error());
    }
    return exit_code(status);
}

struct ConfigHandle {
    rls_config* ptr = nullptr;
    ~ConfigHandle() { rls_config_free(ptr); }
};

int load_config_with_overrides(const std::string& path,
                               const std::vector<std::string>& overrides,
                               const std::string& seed, ConfigHandle& handle) {
    rls_status status = rls_config_load(path.c_str(), &handle.ptr);
    if (status != RLS_OK) return finish(status, "config");
    if (!seed.empty()) {
        status = rls_config_set(handle.ptr, "train.seed", seed.c_str());
        if (status != RLS_OK) return finish(status, "--seed");
    }
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "--set expects section.key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        status = rls_config_set(handle.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (status != RLS_OK) return finish(status, "--set");
    }
    return -1; // caller proceeds
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GRPO post-training laboratory: runs, sweeps, scaling-law fits"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "runs";
    std::string seed_override;
    std::vector<std::string> overrides;

    auto add_config_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--out", out_dir, "output directory for run artifacts");
        cmd->add_option("--seed", seed_override, "override train.seed");
        cmd->add_option("--set", overrides, "override any config field (section.key=value)");
    };

    auto* run_cmd = app.add_subcommand("run", "execute one training run");
    add_config_flags(run_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a sweep over one axis");
    add_config_flags(sweep_cmd);
    std::string axis;
    std::vector<double> values;
    int replicates = 0; // 0 = use config value (handled via --set); default 1 here
    sweep_cmd->add_option("--axis", axis, "model_size | data_budget | reuse_tau | group_size")
        ->required();
    sweep_cmd->add_option("--values", values, "axis values")->required()->delimiter(',');
    sweep_cmd->add_option("--replicates", replicates, "runs per value (default 3)");

    auto* fit_cmd = app.add_subcommand("fit", "fit scaling laws over a run directory");
    std::string runs_dir;
    std::string x_axis = "flops";
    std::string y_target = "loss";
    double burn_in = 0.0;
    std::string fit_out;
    fit_cmd->add_option("runs_dir", runs_dir, "directory containing run subdirectories")
        ->required();
    fit_cmd->add_option("--x-axis", x_axis, "flops | data | steps");
    fit_cmd->add_option("--y", y_target, "loss | length");
    fit_cmd->add_option("--burn-in", burn_in, "fraction of earliest eval points to drop");
    fit_cmd->add_option("--out", fit_out, "output directory (default: runs_dir)");

    auto* check_cmd = app.add_subcommand("check", "slope/intercept consistency report");
    std::string check_runs_dir;
    double check_burn_in = 0.0;
    std::string check_out;
    check_cmd->add_option("runs_dir", check_runs_dir, "directory containing run subdirectories")
        ->required();
    check_cmd->add_option("--burn-in", check_burn_in, "fraction of earliest eval points to drop");
    check_cmd->add_option("--out", check_out, "output directory (default: runs_dir)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a task file");
    std::string checkpoint, dataset;
    double temperature = 0.7;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("checkpoint", checkpoint, "policy checkpoint")->required();
    eval_cmd->add_option("dataset", dataset, "task file (one JSON task per line)")->required();
    eval_cmd->add_option("--temperature", temperature, "sampling temperature");
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

    auto* example_cmd = app.add_subcommand("example-config", "write a starter config file");
    std::string example_path = "rlscale.ini";
    example_cmd->add_option("path", example_path, "where to write the example config");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        ConfigHandle handle;
        const int early = load_config_with_overrides(config_path, overrides, seed_override, handle);
        if (early >= 0) return early;
        char run_id[128] = {0};
        const rls_status status = rls_run(handle.ptr, out_dir.c_str(), run_id, sizeof(run_id));
        if (status == RLS_OK) std::printf("run %s written to %s\n", run_id, out_dir.c_str());
        return finish(status, "run");
    }

    if (sweep_cmd->parsed()) {
        ConfigHandle handle;
        const int early = load_config_with_overrides(config_path, overrides, seed_override, handle);
        if (early >= 0) return early;
        if (replicates <= 0) replicates = 3;
        int ok = 0, failed = 0;
        const rls_status status = rls_sweep(handle.ptr, axis.c_str(), values.data(), values.size(),
                                            replicates, out_dir.c_str(), &ok, &failed);
        if (status == RLS_OK) {
            std::printf("sweep %s: %d runs ok, %d failed (manifest in %s/sweep.json)\n",
                        axis.c_str(), ok, failed, out_dir.c_str());
            if (failed > 0) return 2;
        }
        return finish(status, "sweep");
    }

    if (fit_cmd->parsed()) {
        int n_groups = 0;
        const rls_status status =
            rls_fit(runs_dir.c_str(), x_axis.c_str(), y_target.c_str(), burn_in,
                    fit_out.empty() ? nullptr : fit_out.c_str(), &n_groups);
        if (status == RLS_OK) {
            if (n_groups == 0) std::fprintf(stderr, "warning: no runs found in %s\n", runs_dir.c_str());
            std::printf("fit table: %s/fit_%s_%s.csv (%d groups)\n",
                        (fit_out.empty() ? runs_dir : fit_out).c_str(), x_axis.c_str(),
                        y_target.c_str(), n_groups);
        }
        return finish(status, "fit");
    }

    if (check_cmd->parsed()) {
        int n_groups = 0;
        const rls_status status = rls_check(check_runs_dir.c_str(), check_burn_in,
                                            check_out.empty() ? nullptr : check_out.c_str(),
                                            &n_groups);
        if (status == RLS_OK) {
            if (n_groups == 0) {
                std::fprintf(stderr, "warning: no runs found in %s\n", check_runs_dir.c_str());
            }
            std::printf("consistency report: %s/consistency.csv (%d groups)\n",
                        (check_out.empty() ? check_runs_dir : check_out).c_str(), n_groups);
        }
        return finish(status, "check");
    }

    if (eval_cmd->parsed()) {
        double loss = 1.0;
        int64_t correct = 0, total = 0;
        const rls_status status = rls_eval(checkpoint.c_str(), dataset.c_str(), temperature,
                                           eval_seed, &loss, &correct, &total);
        if (status == RLS_OK) {
            std::printf("L = %.6f (R = %" PRId64 ", R_max = %" PRId64 ")\n", loss, correct, total);
        }
        return finish(status, "eval");
    }

    if (example_cmd->parsed()) {
        const rls_status status = rls_config_write_example(example_path.c_str());
        if (status == RLS_OK) std::printf("wrote %s\n", example_path.c_str());
        return finish(status, "example-config");
    }

    return 1;
}
