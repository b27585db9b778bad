#include "rlscale/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "rlscale/error.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/runlog.hpp"

namespace rlscale {

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::model_size: return "model_size";
        case SweepAxis::data_budget: return "data_budget";
        case SweepAxis::reuse_tau: return "reuse_tau";
        default: return "group_size";
    }
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "model_size") return SweepAxis::model_size;
    if (name == "data_budget") return SweepAxis::data_budget;
    if (name == "reuse_tau") return SweepAxis::reuse_tau;
    if (name == "group_size") return SweepAxis::group_size;
    throw UsageError("unknown sweep axis: " + name +
                     " (expected model_size, data_budget, reuse_tau or group_size)");
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, SweepAxis axis, double value,
                              int replicate) {
    std::uint64_t value_bits;
    static_assert(sizeof(value_bits) == sizeof(value));
    std::memcpy(&value_bits, &value, sizeof(value));
    return seed_mix(base_seed, fnv1a(sweep_axis_name(axis).c_str()), value_bits,
                    static_cast<std::uint64_t>(replicate));
}

namespace {

struct PreparedData {
    Dataset train;
    Dataset eval;
};

// "split" holds eval_size instances out of a jointly generated pool, so
// train and eval are disjoint draws from the same distribution. "resample"
// generates the eval set independently (needed when a family's capacity at
// the chosen difficulties is too small to split).
PreparedData prepare_data(const ExperimentConfig& c) {
    PreparedData data;
    if (c.eval_holdout == "resample") {
        data.train = build_dataset({c.family, c.dataset_size, c.difficulty_min, c.difficulty_max},
                                   c.dataset_seed);
        data.eval = build_dataset({c.family, c.eval_size, c.difficulty_min, c.difficulty_max},
                                  c.eval_seed);
        return data;
    }

    Dataset pool = build_dataset(
        {c.family, c.dataset_size + c.eval_size, c.difficulty_min, c.difficulty_max},
        c.dataset_seed);
    std::vector<std::size_t> order(pool.instances.size());
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(seed_mix(0x73706C69ULL, c.dataset_seed, c.eval_seed));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }
    data.train.seed = pool.seed;
    data.train.spec = {c.family, c.dataset_size, c.difficulty_min, c.difficulty_max};
    data.eval.seed = c.eval_seed;
    data.eval.spec = {c.family, c.eval_size, c.difficulty_min, c.difficulty_max};
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& inst = pool.instances[order[i]];
        if (i < static_cast<std::size_t>(c.eval_size)) {
            data.eval.instances.push_back(std::move(inst));
        } else {
            data.train.instances.push_back(std::move(inst));
        }
    }
    return data;
}

std::string format_value(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

RunManifest build_manifest(const ExperimentConfig& c, const std::string& run_id,
                           const ArchSpec& arch, const ScheduleSpec& schedule) {
    RunManifest m;
    m.run_id = run_id;
    m.variant = c.variant;
    m.arch = arch;
    m.n_nonembed = count_params(arch);
    m.learning_rate = c.train.learning_rate;
    m.batch_size = c.train.batch_size;
    m.group_size = c.train.group_size;
    m.kl_coeff = c.train.kl_coeff;
    m.clip_ratio = c.train.clip_ratio;
    m.train_temperature = c.train.train_temperature;
    m.eval_temperature = c.train.eval_temperature;
    m.max_prompt_len = c.train.max_prompt_len;
    m.max_response_len = c.train.max_response_len;
    m.seed = c.train.seed;
    m.total_samples = schedule.total_samples;
    m.reuse_tau = schedule.reuse_tau;
    m.ordering = ordering_name(schedule.ordering);
    m.schedule_seed = schedule.seed;
    m.family = family_name(c.family);
    m.dataset_size = c.dataset_size;
    m.difficulty_min = c.difficulty_min;
    m.difficulty_max = c.difficulty_max;
    m.dataset_seed = c.dataset_seed;
    m.eval_size = c.eval_size;
    m.eval_seed = c.eval_seed;
    m.eval_holdout = c.eval_holdout;
    m.eval_every = c.eval_every;
    m.flops_budget = c.flops_budget;
    m.code_version = kCodeVersion;
    return m;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                         const std::string& run_id_arg) {
    validate_config(config);

    RunResult result;
    result.run_id =
        run_id_arg.empty() ? "single_s" + std::to_string(config.train.seed) : run_id_arg;
    result.dir = out_dir / result.run_id;

    const ArchSpec arch{vocab::kSize, config.embed_dim, config.hidden_dim,
                        config.context_window};
    const std::uint64_t policy_init_seed = seed_mix(config.train.seed, 1);
    const std::uint64_t eval_sample_seed = seed_mix(config.eval_seed, 3);

    PreparedData data = prepare_data(config);
    for (const auto& dataset : {std::cref(data.train), std::cref(data.eval)}) {
        for (const auto& task : dataset.get().instances) {
            if (static_cast<int>(task.prompt.size()) > config.train.max_prompt_len) {
                throw UsageError("train.max_prompt_len: task " + task.task_id +
                                 " has a prompt of length " + std::to_string(task.prompt.size()));
            }
        }
    }

    // Pass-rate curriculum probes with the freshly initialized policy; the
    // reference model used for pass-rate sorting is a config decision, and
    // the initial policy is the only one that exists before training.
    std::map<std::string, double> pass_rates;
    const std::map<std::string, double>* rates_ptr = nullptr;
    if (config.ordering == Ordering::pass_rate_descending) {
        const PolicyParams probe = init_policy(arch, policy_init_seed);
        for (std::size_t i = 0; i < data.train.instances.size(); ++i) {
            const auto& task = data.train.instances[i];
            pass_rates[task.task_id] =
                estimate_pass_rate(probe, task, config.pass_rate_samples,
                                   config.train.eval_temperature,
                                   seed_mix(config.eval_seed, 0x7261ULL, i));
        }
        rates_ptr = &pass_rates;
    }

    SampleStream stream;
    if (config.steps > 0) {
        ScheduleSpec schedule_spec;
        schedule_spec.total_samples = config.total_samples();
        schedule_spec.reuse_tau = config.reuse_tau;
        schedule_spec.batch_size = config.train.batch_size;
        schedule_spec.ordering = config.ordering;
        // Subsets must be sampled independently per run, so the schedule
        // seed folds in the run's training seed.
        schedule_spec.seed = seed_mix(config.schedule_seed, config.train.seed);
        stream = make_reuse_schedule(data.train, schedule_spec, rates_ptr);
    } else {
        stream.spec.ordering = config.ordering;
        stream.spec.batch_size = config.train.batch_size;
        stream.spec.reuse_tau = config.reuse_tau;
        stream.spec.seed = seed_mix(config.schedule_seed, config.train.seed);
    }

    RunManifest manifest = build_manifest(config, result.run_id, arch, stream.spec);
    RunWriter writer(result.dir, manifest);
    write_stream(stream, result.dir / "stream.txt");
    write_dataset(data.eval, result.dir / "eval_tasks.jsonl");

    TrainOutcome outcome =
        train_run(arch, config.train, data.train, stream, data.eval, config.eval_every,
                  policy_init_seed, eval_sample_seed, config.flops_budget,
                  [&](const StepRecord& r) { writer.append(r); });

    save_policy(outcome.state.policy, result.dir / "policy_final.ckpt");

    for (auto it = outcome.log.records.rbegin(); it != outcome.log.records.rend(); ++it) {
        if (it->eval_loss) {
            result.final_eval_loss = *it->eval_loss;
            break;
        }
    }
    result.numeric_failure = outcome.log.numeric_failure;
    result.ok = !outcome.log.numeric_failure;
    result.error = outcome.log.failure_message;
    return result;
}

SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<double>& values, int replicates,
                      const std::filesystem::path& out_dir) {
    if (values.empty()) throw UsageError("sweep values must be non-empty");
    if (replicates < 1) throw UsageError("replicates must be >= 1");

    SweepResult sweep;
    for (double value : values) {
        for (int rep = 0; rep < replicates; ++rep) {
            ExperimentConfig run_config = config;
            const std::string run_id =
                sweep_axis_name(axis) + "_" + format_value(value) + "_r" + std::to_string(rep);

            RunResult result;
            result.run_id = run_id;
            result.dir = out_dir / run_id;
            try {
                switch (axis) {
                    case SweepAxis::model_size:
                        run_config.hidden_dim = static_cast<int>(value);
                        break;
                    case SweepAxis::group_size:
                        run_config.train.group_size = static_cast<int>(value);
                        break;
                    case SweepAxis::reuse_tau:
                        run_config.reuse_tau = static_cast<std::int64_t>(value);
                        break;
                    case SweepAxis::data_budget: {
                        // Unique-data budget D: keep S fixed, set tau = S / D.
                        const auto d_unique = static_cast<std::int64_t>(value);
                        if (d_unique < 1 || config.total_samples() % d_unique != 0) {
                            throw UsageError("data budget " + format_value(value) +
                                             " must divide total scheduled samples " +
                                             std::to_string(config.total_samples()));
                        }
                        run_config.reuse_tau = config.total_samples() / d_unique;
                        break;
                    }
                }
                run_config.train.seed =
                    derive_run_seed(config.train.seed, axis, value, rep);
                validate_config(run_config);
                result = run_experiment(run_config, out_dir, run_id);
            } catch (const Error& e) {
                result.ok = false;
                result.error = e.what();
            }
            if (!result.ok) ++sweep.failures;
            sweep.runs.push_back(std::move(result));
        }
    }

    nlohmann::ordered_json j;
    j["axis"] = sweep_axis_name(axis);
    j["values"] = values;
    j["replicates"] = replicates;
    j["run_ids"] = nlohmann::ordered_json::array();
    j["failures"] = nlohmann::ordered_json::array();
    for (const auto& r : sweep.runs) {
        j["run_ids"].push_back(r.run_id);
        if (!r.ok) j["failures"].push_back({{"run_id", r.run_id}, {"error", r.error}});
    }
    std::filesystem::create_directories(out_dir);
    sweep.manifest_path = out_dir / "sweep.json";
    std::ofstream out(sweep.manifest_path);
    if (!out) throw IoError("cannot write " + sweep.manifest_path.string());
    out << j.dump(2) << "\n";
    return sweep;
}

FitOutput fit_runs(const std::filesystem::path& runs_dir, XAxis x, YTarget y,
                   const FitOptions& options, const std::filesystem::path& out_dir) {
    const RunSet runset = load_runs(runs_dir);
    FitOutput output;
    output.rows = fit_per_model(runset, x, y, options);

    std::filesystem::create_directories(out_dir);
    const std::string suffix = x_axis_name(x) + "_" + y_target_name(y);
    output.table_path = out_dir / ("fit_" + suffix + ".csv");
    output.plot_dir = out_dir / ("plot_" + suffix);

    std::vector<FitResult> valid;
    for (const auto& row : output.rows) {
        if (row.fit) valid.push_back(*row.fit);
    }
    emit_table(valid, output.table_path);

    std::filesystem::create_directories(output.plot_dir);
    const auto groups = runset.groups();
    for (const auto& row : output.rows) {
        if (!row.fit) continue;
        std::vector<std::pair<double, double>> pooled;
        for (std::size_t idx : groups.at({row.model_n, row.variant})) {
            auto series = extract_series(runset.runs[idx], x, y);
            pooled.insert(pooled.end(), series.begin(), series.end());
        }
        const std::string name =
            "n" + std::to_string(row.model_n) + "_" + row.variant + ".csv";
        emit_plot_data(pooled, *row.fit, output.plot_dir / name);
    }
    return output;
}

CheckOutput check_runs(const std::filesystem::path& runs_dir, const FitOptions& options,
                       const std::filesystem::path& out_dir) {
    const RunSet runset = load_runs(runs_dir);
    CheckOutput output;

    const auto c_rows = fit_per_model(runset, XAxis::flops, YTarget::loss, options);
    const auto d_rows = fit_per_model(runset, XAxis::unique_data, YTarget::loss, options);
    const auto groups = runset.groups();

    for (std::size_t i = 0; i < c_rows.size(); ++i) {
        ConsistencyRow row;
        row.model_n = c_rows[i].model_n;
        row.variant = c_rows[i].variant;
        try {
            if (!c_rows[i].fit) throw DataError("compute-law fit failed: " + c_rows[i].error);
            if (!d_rows[i].fit) throw DataError("data-law fit failed: " + d_rows[i].error);
            row.fit_c = *c_rows[i].fit;
            row.fit_d = *d_rows[i].fit;

            std::vector<std::pair<double, double>> phi_points;
            for (std::size_t idx : groups.at({row.model_n, row.variant})) {
                for (const auto& rec : runset.runs[idx].records) {
                    if (!rec.eval_loss) continue;
                    if (rec.cumulative_flops <= 0.0 || rec.unique_samples_seen <= 0) continue;
                    phi_points.emplace_back(rec.cumulative_flops,
                                            static_cast<double>(rec.unique_samples_seen));
                }
            }
            row.report = check_consistency(row.fit_c, row.fit_d, row.model_n, phi_points);
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        output.rows.push_back(std::move(row));
    }

    std::filesystem::create_directories(out_dir);
    output.report_path = out_dir / "consistency.csv";
    std::ofstream out(output.report_path);
    if (!out) throw IoError("cannot write " + output.report_path.string());
    out << "model_n,variant,k_c,E_c,r2_c,k_d,E_d,r2_d,phi,phi_dispersion,k_gap,"
           "intercept_residual,exact_linkage,error\n";
    char buf[512];
    for (const auto& row : output.rows) {
        if (!row.ok) {
            out << row.model_n << ',' << row.variant << ",,,,,,,,,,,," << row.error << "\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf),
                      "%lld,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6g,%.6g,%.6g,%.6g,%d,\n",
                      static_cast<long long>(row.model_n), row.variant.c_str(), row.fit_c.k,
                      row.fit_c.E, row.fit_c.r2, row.fit_d.k, row.fit_d.E, row.fit_d.r2,
                      row.report.phi, row.report.phi_dispersion, row.report.k_gap,
                      row.report.intercept_residual, row.report.exact_linkage ? 1 : 0);
        out << buf;
    }
    return output;
}

EvalResult eval_checkpoint(const std::filesystem::path& checkpoint,
                           const std::filesystem::path& dataset_path, double temperature,
                           std::uint64_t seed) {
    const PolicyParams policy = load_policy(checkpoint);
    const Dataset dataset = read_dataset(dataset_path);
    if (dataset.instances.empty()) throw DataError("evaluation dataset is empty");
    std::size_t longest = 0;
    for (const auto& t : dataset.instances) longest = std::max(longest, t.answer.size());
    const int max_response_len = static_cast<int>(longest) + 2;
    return evaluate_policy(policy, dataset, temperature, max_response_len, seed);
}

} // namespace rlscale
