#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "rlscale/policy.hpp"
#include "rlscale/runlog.hpp"
#include "rlscale/schedule.hpp"
#include "rlscale/taskgen.hpp"

namespace rlscale {

// G responses to one prompt with everything needed to evaluate the
// group-relative objective: logprob snapshots from the rollout-time policy,
// logprobs under the frozen reference, and binary rewards.
struct RolloutGroup {
    std::string task_id;
    std::vector<int> prompt;
    std::vector<Response> responses;
    std::vector<std::vector<double>> old_logprobs;
    std::vector<std::vector<double>> ref_logprobs;
    std::vector<int> rewards; // {0,1}, recomputable via verify()
};

struct TrainConfig {
    double learning_rate = 0.05;
    int batch_size = 16;      // prompts per step
    int group_size = 16;      // G
    double kl_coeff = 0.01;   // beta
    double clip_ratio = 0.2;  // epsilon, in (0,1)
    double train_temperature = 1.0;
    double eval_temperature = 0.7;
    int max_prompt_len = 16;
    int max_response_len = 2;
    std::uint64_t seed = 0;
};

struct TrainerState {
    PolicyParams policy;
    PolicyParams reference; // frozen copy of the initial policy
    std::int64_t step = 0;
    std::int64_t cumulative_tokens = 0;
    double cumulative_flops = 0.0;
    std::uint64_t rollout_seed_base = 0;
    std::unordered_set<std::string> unique_seen;
};

// Group-relative advantages: (r_i - mean(r)) / std(r) with the population
// standard deviation. Groups with std below 1e-8 get all-zero advantages
// (no learning signal) instead of a divide-by-epsilon blowup.
std::vector<double> compute_advantages(const std::vector<double>& rewards);

struct ObjectiveResult {
    double loss = 0.0; // negated objective, so gradient descent maximizes it
    std::vector<double> gradient;
    double mean_kl = 0.0;
};

// The clipped group-relative surrogate with per-token KL penalty:
//
//   J = (1/G) sum_i (1/|o_i|) sum_t { min[rho*A_i, clip(rho,1-eps,1+eps)*A_i]
//                                     - beta * (exp(d) - d - 1) },  d = ref - cur
//
// rho is exp(cur - old) per token; the advantage is constant across the
// tokens of a response. Returns loss = -J and its exact gradient; the clip
// is treated as a stop-gradient region, with ties at the boundary resolved
// toward the unclipped branch.
ObjectiveResult grpo_objective(const PolicyParams& policy, const RolloutGroup& group,
                               double clip_ratio, double kl_coeff);

struct RolloutBatch {
    std::vector<RolloutGroup> groups;
    std::int64_t tokens_processed = 0; // sum of prompt+response lengths over all rollouts
};

// G samples per task at the training temperature. Per-rollout seeds derive
// from (step, task index, sample index), so results do not depend on
// rollout execution order.
RolloutBatch rollout_batch(const TrainerState& state, const std::vector<TaskInstance>& tasks,
                           const TrainConfig& config);

// One plain gradient-descent update with the summed objective gradient over
// the batch's groups. Throws NumericError (state untouched) when the loss
// or gradient is non-finite. Advances step / token / FLOPs counters and
// returns the step's record (eval_loss unset).
StepRecord train_step(TrainerState& state, const RolloutBatch& batch, const TrainConfig& config);

struct EvalResult {
    std::int64_t correct = 0; // R
    std::int64_t total = 0;   // R_max
    double loss = 1.0;        // L = 1 - R / R_max
};

// Held-out test loss: one sample per task at the given temperature,
// deterministic in seed.
EvalResult evaluate_policy(const PolicyParams& policy, const Dataset& eval_set,
                           double temperature, int max_response_len, std::uint64_t seed);

struct RunLog {
    std::vector<StepRecord> records;
    bool numeric_failure = false;
    std::string failure_message;
};

struct TrainOutcome {
    RunLog log;
    TrainerState state;
};

// Full training loop over a curriculum stream. Always evaluates at step 0
// and after the final executed step, plus every eval_every steps in
// between. Stops early once cumulative FLOPs reach flops_budget (when
// positive). A numeric failure stops training and is reported on the
// returned log with all prior records preserved.
TrainOutcome train_run(const ArchSpec& arch, const TrainConfig& config,
                       const Dataset& train_data, const SampleStream& stream,
                       const Dataset& eval_set, int eval_every,
                       std::uint64_t policy_init_seed, std::uint64_t eval_seed,
                       double flops_budget = 0.0,
                       const std::function<void(const StepRecord&)>& sink = {});

} // namespace rlscale
