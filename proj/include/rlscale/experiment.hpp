#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rlscale/config.hpp"
#include "rlscale/grpo.hpp"
#include "rlscale/lawfit.hpp"

namespace rlscale {

inline constexpr const char* kCodeVersion = "rlscale-0.1.0";

enum class SweepAxis { model_size, data_budget, reuse_tau, group_size };

std::string sweep_axis_name(SweepAxis axis);
SweepAxis sweep_axis_from_name(const std::string& name);

struct RunResult {
    std::string run_id;
    std::filesystem::path dir;
    bool ok = false;
    bool numeric_failure = false;
    std::string error;
    double final_eval_loss = 1.0;
};

// Executes one training run and writes runs/<run_id>/{manifest, steps.log,
// stream.txt, eval_tasks.jsonl, policy_final.ckpt}. The run_id defaults to
// "single_s<seed>".
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                         const std::string& run_id = "");

struct SweepResult {
    std::vector<RunResult> runs;
    std::filesystem::path manifest_path;
    int failures = 0;
};

// One run per (value, replicate) with seeds derived from
// (base seed, axis, value, replicate). Individual run failures are recorded
// and the sweep continues.
SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<double>& values, int replicates,
                      const std::filesystem::path& out_dir);

// Documented seed derivation for sweep replicates.
std::uint64_t derive_run_seed(std::uint64_t base_seed, SweepAxis axis, double value, int replicate);

struct FitOutput {
    std::filesystem::path table_path;
    std::filesystem::path plot_dir;
    std::vector<FitRow> rows;
};

// Fits every (model_n, variant) group found under runs_dir and writes
// fit_<x>_<y>.csv plus per-group plot data.
FitOutput fit_runs(const std::filesystem::path& runs_dir, XAxis x, YTarget y,
                   const FitOptions& options, const std::filesystem::path& out_dir);

struct ConsistencyRow {
    std::int64_t model_n = 0;
    std::string variant;
    bool ok = false;
    std::string error;
    FitResult fit_c;
    FitResult fit_d;
    ConsistencyReport report;
};

struct CheckOutput {
    std::filesystem::path report_path;
    std::vector<ConsistencyRow> rows;
};

// Per-group C-law and D-law fits plus the slope/intercept consistency
// report; writes consistency.csv. An empty directory produces a header-only
// report.
CheckOutput check_runs(const std::filesystem::path& runs_dir, const FitOptions& options,
                       const std::filesystem::path& out_dir);

// Loads a checkpoint and a task file, evaluates single-sample pass rate.
EvalResult eval_checkpoint(const std::filesystem::path& checkpoint,
                           const std::filesystem::path& dataset_path,
                           double temperature, std::uint64_t seed);

} // namespace rlscale
