#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlscale/policy.hpp"
#include "rlscale/taskgen.hpp"

namespace rlscale {

struct TrainConfig;  // grpo.hpp
struct ScheduleSpec; // schedule.hpp

// One optimizer step. Cumulative fields never decrease within a run;
// eval_loss is present exactly on evaluation steps.
struct StepRecord {
    std::int64_t step = 0;
    std::int64_t tokens_this_step = 0;
    std::int64_t cumulative_tokens = 0;
    double cumulative_flops = 0.0;
    std::int64_t unique_samples_seen = 0;
    double train_reward_mean = 0.0;
    double mean_response_length = 0.0;
    std::optional<double> eval_loss;
};

// Everything needed to bit-reproduce a run. Serialized as `manifest`
// (a JSON document) beside the step log.
struct RunManifest {
    std::string run_id;
    std::string variant = "base";
    ArchSpec arch;
    std::int64_t n_nonembed = 0;

    // train config
    double learning_rate = 0.0;
    std::int64_t batch_size = 0;
    std::int64_t group_size = 0;
    double kl_coeff = 0.0;
    double clip_ratio = 0.0;
    double train_temperature = 1.0;
    double eval_temperature = 0.7;
    std::int64_t max_prompt_len = 0;
    std::int64_t max_response_len = 0;
    std::uint64_t seed = 0;

    // schedule
    std::int64_t total_samples = 0;
    std::int64_t reuse_tau = 1;
    std::string ordering = "difficulty-ascending";
    std::uint64_t schedule_seed = 0;

    // data
    std::string family;
    std::int64_t dataset_size = 0;
    std::int64_t difficulty_min = 1;
    std::int64_t difficulty_max = 1;
    std::uint64_t dataset_seed = 0;
    std::int64_t eval_size = 0;
    std::uint64_t eval_seed = 0;
    std::string eval_holdout = "split";

    std::int64_t eval_every = 0;
    double flops_budget = 0.0;
    std::string code_version;
};

struct RunEntry {
    RunManifest manifest;
    std::vector<StepRecord> records;
};

struct RunSet {
    std::vector<RunEntry> runs;
    std::int64_t dropped_lines = 0; // partial trailing lines tolerated on load

    // Groups keyed by (n_nonembed, variant), each a list of indices into runs.
    std::map<std::pair<std::int64_t, std::string>, std::vector<std::size_t>> groups() const;
};

// Appends records to <dir>/steps.log, one JSON object per line, flushing
// after every line so a crash leaves a prefix of valid records. Writes
// <dir>/manifest on construction. Rejects records that violate step or
// cumulative-field monotonicity.
class RunWriter {
public:
    RunWriter(const std::filesystem::path& run_dir, const RunManifest& manifest);
    void append(const StepRecord& record);

private:
    std::ofstream out_;
    bool has_last_ = false;
    StepRecord last_;
};

std::string record_to_line(const StepRecord& record);
StepRecord record_from_line(const std::string& line);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

// Loads one run directory (manifest + steps.log). A partial trailing line
// is dropped and counted; any other malformed line is a data error.
RunEntry load_run(const std::filesystem::path& run_dir, std::int64_t* dropped = nullptr);

// Loads every subdirectory of `root` that contains a manifest. An empty or
// missing root yields an empty RunSet.
RunSet load_runs(const std::filesystem::path& root);

enum class XAxis { flops, unique_data, steps };
enum class YTarget { loss, response_length };

std::string x_axis_name(XAxis x);
XAxis x_axis_from_name(const std::string& name);
std::string y_target_name(YTarget y);
YTarget y_target_from_name(const std::string& name);

// (x, y) points from one run: evaluation-bearing records only, points with
// x <= 0 dropped.
std::vector<std::pair<double, double>> extract_series(const RunEntry& run, XAxis x, YTarget y);

} // namespace rlscale
