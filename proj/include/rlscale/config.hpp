#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlscale/grpo.hpp"
#include "rlscale/schedule.hpp"
#include "rlscale/taskgen.hpp"

namespace rlscale {

// Full experiment description, loaded from a plain-text config file with
// [section] headers and key = value lines. The [full_scale_reference]
// section carries the hyperparameter values used at LLM scale; it is parsed
// and echoed for audit but never drives the toy runs.
struct ExperimentConfig {
    // [model]
    int embed_dim = 8;
    int hidden_dim = 16;
    int context_window = 64;
    std::vector<int> width_ladder = {8, 16, 32, 96, 256};

    // [data]
    Family family = Family::modular_chain;
    int dataset_size = 96;
    int difficulty_min = 1;
    int difficulty_max = 2;
    std::uint64_t dataset_seed = 11;
    int eval_size = 96;
    std::uint64_t eval_seed = 11;
    // "split": hold out eval_size instances from a jointly generated pool
    // (train and eval disjoint). "resample": generate the eval set
    // independently from eval_seed; with eval_seed == dataset_seed this
    // evaluates task mastery on the training pool, which is what orders
    // model sizes at toy scale.
    std::string eval_holdout = "resample";
    std::string variant = "base";

    // [train] — includes every GRPO hyperparameter by its standard name
    TrainConfig train;
    std::int64_t steps = 450;
    int eval_every = 30;

    // [schedule]
    std::int64_t reuse_tau = 75;
    Ordering ordering = Ordering::difficulty_ascending;
    std::uint64_t schedule_seed = 7;
    int pass_rate_samples = 64; // probe samples per task for pass-rate ordering

    // [run]
    int replicates = 3;
    double flops_budget = 0.0; // 0 disables the budget stop criterion

    std::map<std::string, std::string> full_scale_reference;

    std::int64_t total_samples() const { return steps * train.batch_size; }
};

// Parses and validates; errors name the offending section.key.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

// Applies one "section.key" override (used for CLI flags like --seed).
void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value);

// Validation shared by load and overrides; throws UsageError naming the field.
void validate_config(const ExperimentConfig& config);

// A ready-to-run example config, including the full-scale reference block.
std::string example_config_text();

} // namespace rlscale
