#include "rlscale/config.hpp"

#include <fstream>
#include <sstream>

#include "rlscale/error.hpp"

namespace rlscale {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// [section] headers with key = value lines; '#' starts a comment.
std::map<std::string, std::map<std::string, std::string>> parse_ini(const std::string& text) {
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw UsageError("config line " + std::to_string(line_no) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw UsageError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (section.empty()) {
            throw UsageError("config line " + std::to_string(line_no) + ": key outside any section");
        }
        sections[section][key] = value;
    }
    return sections;
}

struct FieldReader {
    const std::map<std::string, std::map<std::string, std::string>>& sections;
    std::map<std::string, bool> consumed;

    const std::string* find(const std::string& section, const std::string& key) {
        const auto s = sections.find(section);
        if (s == sections.end()) return nullptr;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        consumed[section + "." + key] = true;
        return &k->second;
    }

    template <typename T, typename Parse>
    void read(const std::string& section, const std::string& key, T& out, Parse parse) {
        const std::string* raw = find(section, key);
        if (!raw) return;
        try {
            out = parse(*raw);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw UsageError(section + "." + key + ": cannot parse value '" + *raw + "'");
        }
    }

    void check_no_unknown_keys() const {
        for (const auto& [section, keys] : sections) {
            if (section == "full_scale_reference") continue; // audit block, free-form
            for (const auto& [key, value] : keys) {
                if (!consumed.count(section + "." + key)) {
                    throw UsageError("unknown config key " + section + "." + key);
                }
            }
        }
    }
};

long long parse_int(const std::string& s) {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<int>(parse_int(item)));
    }
    if (out.empty()) throw std::invalid_argument(s);
    return out;
}

void apply_fields(ExperimentConfig& c, FieldReader& r) {
    r.read("model", "embed_dim", c.embed_dim,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("model", "hidden_dim", c.hidden_dim,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("model", "context_window", c.context_window,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("model", "width_ladder", c.width_ladder, parse_int_list);

    r.read("data", "family", c.family,
           [](const std::string& s) { return family_from_name(s); });
    r.read("data", "dataset_size", c.dataset_size,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("data", "difficulty_min", c.difficulty_min,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("data", "difficulty_max", c.difficulty_max,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("data", "dataset_seed", c.dataset_seed, parse_u64);
    r.read("data", "eval_size", c.eval_size,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("data", "eval_seed", c.eval_seed, parse_u64);
    r.read("data", "eval_holdout", c.eval_holdout, [](const std::string& s) {
        if (s != "split" && s != "resample") throw UsageError("data.eval_holdout: expected split or resample");
        return s;
    });
    r.read("data", "variant", c.variant, [](const std::string& s) { return s; });

    r.read("train", "learning_rate", c.train.learning_rate, parse_double);
    r.read("train", "batch_size", c.train.batch_size,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("train", "group_size", c.train.group_size,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("train", "kl_loss_coefficient", c.train.kl_coeff, parse_double);
    r.read("train", "clip_ratio", c.train.clip_ratio, parse_double);
    r.read("train", "rollout_temperature_train", c.train.train_temperature, parse_double);
    r.read("train", "rollout_temperature_eval", c.train.eval_temperature, parse_double);
    r.read("train", "max_prompt_len", c.train.max_prompt_len,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("train", "max_response_len", c.train.max_response_len,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("train", "seed", c.train.seed, parse_u64);
    r.read("train", "steps", c.steps, [](const std::string& s) { return parse_int(s); });
    r.read("train", "eval_every", c.eval_every,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });

    r.read("schedule", "reuse_tau", c.reuse_tau, [](const std::string& s) { return parse_int(s); });
    r.read("schedule", "ordering", c.ordering,
           [](const std::string& s) { return ordering_from_name(s); });
    r.read("schedule", "schedule_seed", c.schedule_seed, parse_u64);
    r.read("schedule", "pass_rate_samples", c.pass_rate_samples,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });

    r.read("run", "replicates", c.replicates,
           [](const std::string& s) { return static_cast<int>(parse_int(s)); });
    r.read("run", "flops_budget", c.flops_budget, parse_double);

    const auto ref = r.sections.find("full_scale_reference");
    if (ref != r.sections.end()) c.full_scale_reference = ref->second;
}

} // namespace

void validate_config(const ExperimentConfig& c) {
    const auto fail = [](const std::string& field, const std::string& why) {
        throw UsageError(field + ": " + why);
    };
    if (c.embed_dim < 1) fail("model.embed_dim", "must be >= 1");
    if (c.hidden_dim < 1) fail("model.hidden_dim", "must be >= 1");
    if (c.context_window < 1) fail("model.context_window", "must be >= 1");
    if (c.width_ladder.empty()) fail("model.width_ladder", "must be non-empty");
    for (int w : c.width_ladder) {
        if (w < 1) fail("model.width_ladder", "widths must be >= 1");
    }
    if (c.dataset_size < 1) fail("data.dataset_size", "must be >= 1");
    if (c.difficulty_min < 1 || c.difficulty_min > c.difficulty_max) {
        fail("data.difficulty_min", "must satisfy 1 <= difficulty_min <= difficulty_max");
    }
    if (c.difficulty_max > max_difficulty(c.family)) {
        fail("data.difficulty_max", "family " + family_name(c.family) + " supports at most " +
                                        std::to_string(max_difficulty(c.family)));
    }
    if (c.eval_size < 1) fail("data.eval_size", "must be >= 1");
    if (c.train.learning_rate <= 0.0) fail("train.learning_rate", "must be > 0");
    if (c.train.batch_size < 1) fail("train.batch_size", "must be >= 1");
    if (c.train.group_size < 2) fail("train.group_size", "must be >= 2");
    if (c.train.kl_coeff < 0.0) fail("train.kl_loss_coefficient", "must be >= 0");
    if (c.train.clip_ratio <= 0.0 || c.train.clip_ratio >= 1.0) {
        fail("train.clip_ratio", "must be in (0,1)");
    }
    if (c.train.train_temperature <= 0.0) fail("train.rollout_temperature_train", "must be > 0");
    if (c.train.eval_temperature <= 0.0) fail("train.rollout_temperature_eval", "must be > 0");
    if (c.train.max_prompt_len < 1) fail("train.max_prompt_len", "must be >= 1");
    if (c.train.max_response_len < 1) fail("train.max_response_len", "must be >= 1");
    if (c.train.max_prompt_len + c.train.max_response_len > c.context_window) {
        fail("model.context_window", "must cover max_prompt_len + max_response_len");
    }
    if (c.steps < 0) fail("train.steps", "must be >= 0");
    if (c.eval_every < 1) fail("train.eval_every", "must be >= 1");
    if (c.reuse_tau < 1) fail("schedule.reuse_tau", "must be >= 1");
    if (c.steps > 0 && c.total_samples() % c.reuse_tau != 0) {
        fail("schedule.reuse_tau", "must divide steps * batch_size (" +
                                       std::to_string(c.total_samples()) + ")");
    }
    if (c.pass_rate_samples < 1) fail("schedule.pass_rate_samples", "must be >= 1");
    if (c.replicates < 1) fail("run.replicates", "must be >= 1");
    if (c.flops_budget < 0.0) fail("run.flops_budget", "must be >= 0");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    FieldReader reader{parse_ini(text), {}};
    apply_fields(config, reader);
    reader.check_no_unknown_keys();
    validate_config(config);
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
        throw UsageError("override key must look like section.key: " + dotted_key);
    }
    std::map<std::string, std::map<std::string, std::string>> sections;
    sections[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
    FieldReader reader{sections, {}};
    apply_fields(config, reader);
    reader.check_no_unknown_keys();
    validate_config(config);
}

std::string example_config_text() {
    return R"(# rlscale experiment configuration.
# Active values below are toy-scale; the [full_scale_reference] section
# records the hyperparameters used by the original large-scale study and is
# kept for audit only.

[model]
embed_dim = 8
hidden_dim = 16
context_window = 64
width_ladder = 8,16,32,96,256   # hidden widths for the model_size sweep axis

[data]
family = modular-chain          # modular-chain | copy-reverse
dataset_size = 96
difficulty_min = 1
difficulty_max = 2
dataset_seed = 11
# eval_seed == dataset_seed with "resample" evaluates mastery of the
# training pool; use "split" and a distinct eval_seed for a disjoint
# held-out set.
eval_size = 96
eval_seed = 11
eval_holdout = resample         # split | resample
variant = base

[train]
learning_rate = 0.05
batch_size = 16
group_size = 16
kl_loss_coefficient = 0.01
clip_ratio = 0.2
rollout_temperature_train = 1.0
rollout_temperature_eval = 0.7
max_prompt_len = 16
max_response_len = 2
steps = 450
eval_every = 30
seed = 1

[schedule]
reuse_tau = 75
ordering = difficulty-ascending # difficulty-ascending | pass-rate-descending
schedule_seed = 7
pass_rate_samples = 64

[run]
replicates = 3
flops_budget = 0                # > 0 stops a run once cumulative FLOPs reach it

[full_scale_reference]
learning_rate = 1e-6
batch_size = 512
kl_loss_coefficient = 0.001
rollout_temperature_train = 1.0
rollout_temperature_eval = 0.7
clip_ratio = 0.2
group_size = 16
input_sequence_length = 2048
output_sequence_length = 4096
)";
}

} // namespace rlscale
