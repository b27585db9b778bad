#include "rlscale/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rlscale/compute.hpp"
#include "rlscale/error.hpp"
#include "rlscale/rng.hpp"

namespace rlscale {

namespace {

// Groups with reward spread below this are treated as zero-variance:
// all-correct or all-wrong prompts carry no relative learning signal.
constexpr double kStdFloor = 1e-8;

void check_group(const RolloutGroup& group) {
    const std::size_t g = group.responses.size();
    if (g < 2) throw UsageError("rollout group must have G >= 2 responses");
    if (group.old_logprobs.size() != g || group.ref_logprobs.size() != g ||
        group.rewards.size() != g) {
        throw DataError("group " + group.task_id + ": mismatched per-response field counts");
    }
    for (std::size_t i = 0; i < g; ++i) {
        const std::size_t len = group.responses[i].tokens.size();
        if (len == 0) throw DataError("group " + group.task_id + ": empty response");
        if (group.responses[i].logprobs.size() != len ||
            group.old_logprobs[i].size() != len || group.ref_logprobs[i].size() != len) {
            throw DataError("group " + group.task_id + ": per-token vector lengths disagree");
        }
    }
}

} // namespace

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
    const std::size_t g = rewards.size();
    if (g < 2) throw UsageError("advantage normalization needs G >= 2 rewards");

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(g); // population variance, no Bessel correction
    const double stddev = std::sqrt(var);

    std::vector<double> adv(g, 0.0);
    if (stddev < kStdFloor) return adv;
    for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / stddev;
    return adv;
}

ObjectiveResult grpo_objective(const PolicyParams& policy, const RolloutGroup& group,
                               double clip_ratio, double kl_coeff) {
    if (clip_ratio <= 0.0 || clip_ratio >= 1.0) throw UsageError("clip ratio must be in (0,1)");
    if (kl_coeff < 0.0) throw UsageError("KL coefficient must be >= 0");
    check_group(group);

    const std::size_t g = group.responses.size();
    std::vector<double> rewards(g);
    for (std::size_t i = 0; i < g; ++i) rewards[i] = group.rewards[i];
    const std::vector<double> advantages = compute_advantages(rewards);

    ObjectiveResult result;
    result.gradient.assign(policy.theta.size(), 0.0);

    double objective = 0.0;
    double kl_sum = 0.0;
    std::int64_t kl_count = 0;
    const double inv_g = 1.0 / static_cast<double>(g);

    for (std::size_t i = 0; i < g; ++i) {
        const Response& resp = group.responses[i];
        const std::vector<double> cur =
            logprob_response(policy, group.prompt, resp.tokens);
        const double adv = advantages[i];
        const double inv_len = 1.0 / static_cast<double>(resp.tokens.size());
        const double scale = inv_g * inv_len;

        // d(objective)/d(cur_t), accumulated per token, then one weighted
        // backward pass per response.
        std::vector<double> weights(cur.size(), 0.0);

        for (std::size_t t = 0; t < cur.size(); ++t) {
            const double rho = std::exp(cur[t] - group.old_logprobs[i][t]);
            const double unclipped = rho * adv;
            const double clipped = std::clamp(rho, 1.0 - clip_ratio, 1.0 + clip_ratio) * adv;

            double surrogate;
            double surrogate_dcur; // derivative of the min-term wrt cur_t
            if (unclipped <= clipped) {
                // Ties (including rho inside the clip interval) follow the
                // unclipped branch; this is the documented subgradient choice
                // at the clip boundary.
                surrogate = unclipped;
                surrogate_dcur = rho * adv; // d(rho)/d(cur) = rho
            } else {
                surrogate = clipped;
                surrogate_dcur = 0.0; // clip is a stop-gradient region
            }

            // Non-negative per-token KL estimator against the frozen
            // reference: exp(d) - d - 1 with d = ref - cur.
            const double delta = group.ref_logprobs[i][t] - cur[t];
            const double kl = std::exp(delta) - delta - 1.0;
            const double kl_dcur = 1.0 - std::exp(delta); // d(kl)/d(cur)

            objective += scale * (surrogate - kl_coeff * kl);
            weights[t] = scale * (surrogate_dcur - kl_coeff * kl_dcur);
            kl_sum += kl;
            ++kl_count;
        }

        // Loss is the negated objective, so flip the weights once here.
        for (auto& w : weights) w = -w;
        const std::vector<double> grad =
            grad_weighted_logprob(policy, group.prompt, resp.tokens, weights);
        for (std::size_t k = 0; k < grad.size(); ++k) result.gradient[k] += grad[k];
    }

    result.loss = -objective;
    result.mean_kl = kl_count > 0 ? kl_sum / static_cast<double>(kl_count) : 0.0;
    return result;
}

RolloutBatch rollout_batch(const TrainerState& state, const std::vector<TaskInstance>& tasks,
                           const TrainConfig& config) {
    if (tasks.empty()) throw UsageError("rollout_batch: empty task list");
    if (config.group_size < 2) throw UsageError("group_size must be >= 2");

    RolloutBatch batch;
    batch.groups.reserve(tasks.size());

    for (std::size_t task_idx = 0; task_idx < tasks.size(); ++task_idx) {
        const TaskInstance& task = tasks[task_idx];
        if (static_cast<int>(task.prompt.size()) > config.max_prompt_len) {
            throw DataError("task " + task.task_id + ": prompt longer than max_prompt_len");
        }
        RolloutGroup group;
        group.task_id = task.task_id;
        group.prompt = task.prompt;

        for (int j = 0; j < config.group_size; ++j) {
            const std::uint64_t rollout_seed =
                seed_mix(state.rollout_seed_base, static_cast<std::uint64_t>(state.step),
                         static_cast<std::uint64_t>(task_idx), static_cast<std::uint64_t>(j));
            Response r = sample(state.policy, task.prompt, config.train_temperature,
                                config.max_response_len, rollout_seed, vocab::kEos);
            batch.tokens_processed +=
                static_cast<std::int64_t>(task.prompt.size()) + r.length();
            // The current policy is the rollout policy, so its per-token
            // logprobs are the "old" snapshot for the update.
            group.old_logprobs.push_back(r.logprobs);
            group.ref_logprobs.push_back(
                logprob_response(state.reference, task.prompt, r.tokens));
            group.rewards.push_back(verify(task, r.tokens));
            group.responses.push_back(std::move(r));
        }
        batch.groups.push_back(std::move(group));
    }
    return batch;
}

StepRecord train_step(TrainerState& state, const RolloutBatch& batch, const TrainConfig& config) {
    if (batch.groups.empty()) throw UsageError("train_step: empty batch");

    std::vector<double> total_grad(state.policy.theta.size(), 0.0);
    double total_loss = 0.0;
    double reward_sum = 0.0;
    std::int64_t reward_count = 0;
    double length_sum = 0.0;
    std::int64_t response_count = 0;

    for (const auto& group : batch.groups) {
        ObjectiveResult obj =
            grpo_objective(state.policy, group, config.clip_ratio, config.kl_coeff);
        total_loss += obj.loss;
        for (std::size_t k = 0; k < total_grad.size(); ++k) total_grad[k] += obj.gradient[k];
        for (int r : group.rewards) {
            reward_sum += r;
            ++reward_count;
        }
        for (const auto& resp : group.responses) {
            length_sum += resp.length();
            ++response_count;
        }
    }

    if (!std::isfinite(total_loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(state.step + 1));
    }
    for (double gval : total_grad) {
        if (!std::isfinite(gval)) {
            throw NumericError("non-finite gradient at step " + std::to_string(state.step + 1));
        }
    }

    for (std::size_t k = 0; k < total_grad.size(); ++k) {
        state.policy.theta[k] -= config.learning_rate * total_grad[k];
    }

    state.step += 1;
    state.cumulative_tokens += batch.tokens_processed;
    state.cumulative_flops +=
        step_flops(state.policy.n_nonembed, batch.tokens_processed);
    for (const auto& group : batch.groups) state.unique_seen.insert(group.task_id);

    StepRecord record;
    record.step = state.step;
    record.tokens_this_step = batch.tokens_processed;
    record.cumulative_tokens = state.cumulative_tokens;
    record.cumulative_flops = state.cumulative_flops;
    record.unique_samples_seen = static_cast<std::int64_t>(state.unique_seen.size());
    record.train_reward_mean =
        reward_count > 0 ? reward_sum / static_cast<double>(reward_count) : 0.0;
    record.mean_response_length =
        response_count > 0 ? length_sum / static_cast<double>(response_count) : 0.0;
    return record;
}

EvalResult evaluate_policy(const PolicyParams& policy, const Dataset& eval_set,
                           double temperature, int max_response_len, std::uint64_t seed) {
    EvalResult result;
    result.total = static_cast<std::int64_t>(eval_set.instances.size());
    if (result.total == 0) throw DataError("evaluation set is empty");
    for (std::size_t i = 0; i < eval_set.instances.size(); ++i) {
        const TaskInstance& task = eval_set.instances[i];
        Response r = sample(policy, task.prompt, temperature, max_response_len,
                            seed_mix(seed, static_cast<std::uint64_t>(i)), vocab::kEos);
        result.correct += verify(task, r.tokens);
    }
    result.loss = 1.0 - static_cast<double>(result.correct) / static_cast<double>(result.total);
    return result;
}

TrainOutcome train_run(const ArchSpec& arch, const TrainConfig& config,
                       const Dataset& train_data, const SampleStream& stream,
                       const Dataset& eval_set, int eval_every, std::uint64_t policy_init_seed,
                       std::uint64_t eval_seed, double flops_budget,
                       const std::function<void(const StepRecord&)>& sink) {
    if (eval_every < 1) throw UsageError("eval_every must be >= 1");
    if (static_cast<std::int64_t>(stream.ids.size()) % config.batch_size != 0) {
        throw UsageError("schedule length not divisible by batch_size");
    }

    std::unordered_map<std::string, const TaskInstance*> by_id;
    for (const auto& t : train_data.instances) by_id[t.task_id] = &t;

    TrainOutcome outcome;
    outcome.state.policy = init_policy(arch, policy_init_seed);
    outcome.state.reference = outcome.state.policy;
    outcome.state.rollout_seed_base = seed_mix(0x726F6C6CULL, config.seed);

    const auto emit = [&](StepRecord record) {
        if (sink) sink(record);
        outcome.log.records.push_back(std::move(record));
    };

    const auto run_eval = [&]() {
        return evaluate_policy(outcome.state.policy, eval_set, config.eval_temperature,
                               config.max_response_len, eval_seed)
            .loss;
    };

    // Step-0 record: evaluation of the untrained policy, no tokens consumed.
    {
        StepRecord initial;
        initial.eval_loss = run_eval();
        emit(initial);
    }

    const std::int64_t n_steps =
        static_cast<std::int64_t>(stream.ids.size()) / config.batch_size;
    for (std::int64_t s = 0; s < n_steps; ++s) {
        std::vector<TaskInstance> tasks;
        tasks.reserve(static_cast<std::size_t>(config.batch_size));
        for (int b = 0; b < config.batch_size; ++b) {
            const std::string& id =
                stream.ids[static_cast<std::size_t>(s * config.batch_size + b)];
            const auto it = by_id.find(id);
            if (it == by_id.end()) throw DataError("schedule references unknown task " + id);
            tasks.push_back(*it->second);
        }

        StepRecord record;
        try {
            RolloutBatch batch = rollout_batch(outcome.state, tasks, config);
            record = train_step(outcome.state, batch, config);
        } catch (const NumericError& e) {
            outcome.log.numeric_failure = true;
            outcome.log.failure_message = e.what();
            break;
        }

        const bool budget_reached =
            flops_budget > 0.0 && outcome.state.cumulative_flops >= flops_budget;
        const bool last = (s + 1 == n_steps) || budget_reached;
        if (outcome.state.step % eval_every == 0 || last) {
            record.eval_loss = run_eval();
        }
        emit(std::move(record));
        if (budget_reached) break;
    }
    return outcome;
}

} // namespace rlscale
