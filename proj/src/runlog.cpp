#include "rlscale/runlog.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "rlscale/error.hpp"

namespace rlscale {

namespace {

constexpr int kFormatVersion = 1;

using ordered_json = nlohmann::ordered_json;

template <typename T>
T require_field(const nlohmann::json& j, const char* field, const std::string& where) {
    if (!j.contains(field)) {
        throw DataError(where + ": format v" + std::to_string(kFormatVersion) +
                        " record missing field '" + field + "'");
    }
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(where + ": format v" + std::to_string(kFormatVersion) +
                        " field '" + field + "' has the wrong type");
    }
}

void check_monotonic(const StepRecord& prev, const StepRecord& next) {
    if (next.step <= prev.step) {
        throw DataError("step " + std::to_string(next.step) + " does not advance past " +
                        std::to_string(prev.step));
    }
    if (next.cumulative_tokens < prev.cumulative_tokens ||
        next.cumulative_flops < prev.cumulative_flops ||
        next.unique_samples_seen < prev.unique_samples_seen) {
        throw DataError("cumulative fields decreased at step " + std::to_string(next.step));
    }
}

void check_record(const StepRecord& r) {
    if (r.train_reward_mean < 0.0 || r.train_reward_mean > 1.0) {
        throw DataError("train_reward_mean out of [0,1] at step " + std::to_string(r.step));
    }
    if (r.eval_loss && (*r.eval_loss < 0.0 || *r.eval_loss > 1.0)) {
        throw DataError("eval_loss out of [0,1] at step " + std::to_string(r.step));
    }
}

} // namespace

std::string record_to_line(const StepRecord& r) {
    ordered_json j;
    j["step"] = r.step;
    j["tokens_this_step"] = r.tokens_this_step;
    j["cumulative_tokens"] = r.cumulative_tokens;
    j["cumulative_flops"] = r.cumulative_flops;
    j["unique_samples_seen"] = r.unique_samples_seen;
    j["train_reward_mean"] = r.train_reward_mean;
    j["mean_response_length"] = r.mean_response_length;
    if (r.eval_loss) j["eval_loss"] = *r.eval_loss;
    return j.dump();
}

StepRecord record_from_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("unparseable record line: ") + e.what());
    }
    StepRecord r;
    r.step = require_field<std::int64_t>(j, "step", "steps.log");
    r.tokens_this_step = require_field<std::int64_t>(j, "tokens_this_step", "steps.log");
    r.cumulative_tokens = require_field<std::int64_t>(j, "cumulative_tokens", "steps.log");
    r.cumulative_flops = require_field<double>(j, "cumulative_flops", "steps.log");
    r.unique_samples_seen = require_field<std::int64_t>(j, "unique_samples_seen", "steps.log");
    r.train_reward_mean = require_field<double>(j, "train_reward_mean", "steps.log");
    r.mean_response_length = require_field<double>(j, "mean_response_length", "steps.log");
    if (j.contains("eval_loss")) r.eval_loss = j.at("eval_loss").get<double>();
    check_record(r);
    return r;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["run_id"] = m.run_id;
    j["variant"] = m.variant;
    j["arch"] = {{"vocab_size", m.arch.vocab_size},
                 {"embed_dim", m.arch.embed_dim},
                 {"hidden_dim", m.arch.hidden_dim},
                 {"context_window", m.arch.context_window}};
    j["n_nonembed"] = m.n_nonembed;
    j["train"] = {{"learning_rate", m.learning_rate},
                  {"batch_size", m.batch_size},
                  {"group_size", m.group_size},
                  {"kl_loss_coefficient", m.kl_coeff},
                  {"clip_ratio", m.clip_ratio},
                  {"rollout_temperature_train", m.train_temperature},
                  {"rollout_temperature_eval", m.eval_temperature},
                  {"max_prompt_len", m.max_prompt_len},
                  {"max_response_len", m.max_response_len},
                  {"seed", m.seed}};
    j["schedule"] = {{"total_samples", m.total_samples},
                     {"reuse_tau", m.reuse_tau},
                     {"ordering", m.ordering},
                     {"seed", m.schedule_seed}};
    j["data"] = {{"family", m.family},
                 {"dataset_size", m.dataset_size},
                 {"difficulty_min", m.difficulty_min},
                 {"difficulty_max", m.difficulty_max},
                 {"seed", m.dataset_seed},
                 {"eval_size", m.eval_size},
                 {"eval_seed", m.eval_seed},
                 {"eval_holdout", m.eval_holdout}};
    j["eval_every"] = m.eval_every;
    j["flops_budget"] = m.flops_budget;
    j["code_version"] = m.code_version;

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    const std::string where = path.string();
    const int version = require_field<int>(j, "format_version", where);
    if (version != kFormatVersion) {
        throw DataError(where + ": unsupported format_version " + std::to_string(version));
    }
    RunManifest m;
    m.run_id = require_field<std::string>(j, "run_id", where);
    m.variant = require_field<std::string>(j, "variant", where);
    const auto arch = j.at("arch");
    m.arch.vocab_size = require_field<int>(arch, "vocab_size", where);
    m.arch.embed_dim = require_field<int>(arch, "embed_dim", where);
    m.arch.hidden_dim = require_field<int>(arch, "hidden_dim", where);
    m.arch.context_window = require_field<int>(arch, "context_window", where);
    m.n_nonembed = require_field<std::int64_t>(j, "n_nonembed", where);
    const auto train = j.at("train");
    m.learning_rate = require_field<double>(train, "learning_rate", where);
    m.batch_size = require_field<std::int64_t>(train, "batch_size", where);
    m.group_size = require_field<std::int64_t>(train, "group_size", where);
    m.kl_coeff = require_field<double>(train, "kl_loss_coefficient", where);
    m.clip_ratio = require_field<double>(train, "clip_ratio", where);
    m.train_temperature = require_field<double>(train, "rollout_temperature_train", where);
    m.eval_temperature = require_field<double>(train, "rollout_temperature_eval", where);
    m.max_prompt_len = require_field<std::int64_t>(train, "max_prompt_len", where);
    m.max_response_len = require_field<std::int64_t>(train, "max_response_len", where);
    m.seed = require_field<std::uint64_t>(train, "seed", where);
    const auto sched = j.at("schedule");
    m.total_samples = require_field<std::int64_t>(sched, "total_samples", where);
    m.reuse_tau = require_field<std::int64_t>(sched, "reuse_tau", where);
    m.ordering = require_field<std::string>(sched, "ordering", where);
    m.schedule_seed = require_field<std::uint64_t>(sched, "seed", where);
    const auto data = j.at("data");
    m.family = require_field<std::string>(data, "family", where);
    m.dataset_size = require_field<std::int64_t>(data, "dataset_size", where);
    m.difficulty_min = require_field<std::int64_t>(data, "difficulty_min", where);
    m.difficulty_max = require_field<std::int64_t>(data, "difficulty_max", where);
    m.dataset_seed = require_field<std::uint64_t>(data, "seed", where);
    m.eval_size = require_field<std::int64_t>(data, "eval_size", where);
    m.eval_seed = require_field<std::uint64_t>(data, "eval_seed", where);
    m.eval_holdout = require_field<std::string>(data, "eval_holdout", where);
    m.eval_every = require_field<std::int64_t>(j, "eval_every", where);
    m.flops_budget = require_field<double>(j, "flops_budget", where);
    m.code_version = require_field<std::string>(j, "code_version", where);
    return m;
}

RunWriter::RunWriter(const std::filesystem::path& run_dir, const RunManifest& manifest) {
    std::filesystem::create_directories(run_dir);
    write_manifest(manifest, run_dir / "manifest");
    out_.open(run_dir / "steps.log");
    if (!out_) throw IoError("cannot open " + (run_dir / "steps.log").string() + " for writing");
}

void RunWriter::append(const StepRecord& record) {
    check_record(record);
    if (has_last_) check_monotonic(last_, record);
    out_ << record_to_line(record) << "\n";
    out_.flush();
    if (!out_) throw IoError("failed appending step record");
    last_ = record;
    has_last_ = true;
}

RunEntry load_run(const std::filesystem::path& run_dir, std::int64_t* dropped) {
    RunEntry entry;
    entry.manifest = read_manifest(run_dir / "manifest");

    const auto log_path = run_dir / "steps.log";
    std::ifstream in(log_path);
    if (!in) throw IoError("cannot open " + log_path.string());
    std::string line;
    bool pending_incomplete = false;
    while (std::getline(in, line)) {
        if (pending_incomplete) {
            throw DataError(log_path.string() + ": unparseable interior line");
        }
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            // An interrupted writer can leave one truncated final line;
            // anything else that fails to parse is corrupt data.
            pending_incomplete = true;
            continue;
        }
        StepRecord r = record_from_line(line); // schema errors propagate with the field name
        if (!entry.records.empty()) check_monotonic(entry.records.back(), r);
        entry.records.push_back(r);
    }
    if (pending_incomplete && dropped) ++*dropped;
    return entry;
}

RunSet load_runs(const std::filesystem::path& root) {
    RunSet set;
    if (!std::filesystem::exists(root)) return set;
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(root)) {
        if (e.is_directory() && std::filesystem::exists(e.path() / "manifest")) {
            dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<std::string> seen_ids;
    for (const auto& dir : dirs) {
        RunEntry entry = load_run(dir, &set.dropped_lines);
        if (std::find(seen_ids.begin(), seen_ids.end(), entry.manifest.run_id) != seen_ids.end()) {
            throw DataError("duplicate run_id " + entry.manifest.run_id);
        }
        seen_ids.push_back(entry.manifest.run_id);
        set.runs.push_back(std::move(entry));
    }
    return set;
}

std::map<std::pair<std::int64_t, std::string>, std::vector<std::size_t>> RunSet::groups() const {
    std::map<std::pair<std::int64_t, std::string>, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        by_group[{runs[i].manifest.n_nonembed, runs[i].manifest.variant}].push_back(i);
    }
    return by_group;
}

std::string x_axis_name(XAxis x) {
    switch (x) {
        case XAxis::flops: return "flops";
        case XAxis::unique_data: return "data";
        default: return "steps";
    }
}

XAxis x_axis_from_name(const std::string& name) {
    if (name == "flops") return XAxis::flops;
    if (name == "data") return XAxis::unique_data;
    if (name == "steps") return XAxis::steps;
    throw UsageError("unknown x axis: " + name + " (expected flops, data or steps)");
}

std::string y_target_name(YTarget y) {
    return y == YTarget::loss ? "loss" : "length";
}

YTarget y_target_from_name(const std::string& name) {
    if (name == "loss") return YTarget::loss;
    if (name == "length") return YTarget::response_length;
    throw UsageError("unknown y target: " + name + " (expected loss or length)");
}

std::vector<std::pair<double, double>> extract_series(const RunEntry& run, XAxis x, YTarget y) {
    std::vector<std::pair<double, double>> points;
    for (const auto& r : run.records) {
        if (!r.eval_loss) continue; // evaluation-bearing records only
        double xv = 0.0;
        switch (x) {
            case XAxis::flops: xv = r.cumulative_flops; break;
            case XAxis::unique_data: xv = static_cast<double>(r.unique_samples_seen); break;
            case XAxis::steps: xv = static_cast<double>(r.step); break;
        }
        if (xv <= 0.0) continue; // the step-0 record never enters log fits
        const double yv =
            y == YTarget::loss ? *r.eval_loss : r.mean_response_length;
        points.emplace_back(xv, yv);
    }
    return points;
}

} // namespace rlscale
